"""Randomized invariants checked with hypothesis."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxgauge import classical, opanalysis, qbasis, qprop
from boxgauge.classical import ClassicalState, Gauge
from boxgauge.model import DrivingField, PhysicalConstants, eval_F

C = PhysicalConstants()
finite = dict(allow_nan=False, allow_infinity=False)
positive = st.floats(0.2, 5.0, **finite)
times = st.floats(-3.0, 3.0, **finite)

constants = st.builds(PhysicalConstants, hbar=positive, mass=positive, box_length=positive,
                      alpha=st.floats(-3.0, 3.0, **finite))
fields = st.one_of(
    st.builds(DrivingField.constant, st.floats(-10, 10, **finite), times),
    st.builds(DrivingField.cosine, st.floats(-10, 10, **finite), st.floats(0.5, 20, **finite), times),
)
settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@given(st.integers(2, 24), constants)
def test_P_and_x_exactly_hermitian(N, c):
    P = qbasis.matrix_P(N, c)
    assert P.hermiticity_residual() == 0.0
    assert np.all(np.diag(P.entries) == 0)
    assert qbasis.matrix_x(N, c).hermiticity_residual() == 0.0


@given(st.integers(2, 20), st.floats(-8, 8, **finite))
def test_gauge_matrix_is_a_contraction(N, theta):
    U = qbasis.matrix_gauge_phase(N, theta, PhysicalConstants()).entries
    assert qprop.operator_norm(U) <= 1 + 1e-10


@given(fields, times, times, times)
def test_F_is_additive(fld, a, b, t):
    # F anchored at any point differs by a constant: F(t) - F(a) is the integral from a to t
    shifted = DrivingField.from_dict({**fld.to_dict(), "t0": a})
    assert eval_F(shifted, t) == pytest.approx(eval_F(fld, t) - eval_F(fld, a), abs=1e-9)
    assert eval_F(fld, t) - eval_F(fld, b) == pytest.approx(
        (eval_F(fld, t) - eval_F(fld, a)) + (eval_F(fld, a) - eval_F(fld, b)), abs=1e-9)


@given(fields, constants, st.floats(-2, 2, **finite), st.floats(-2, 2, **finite), times, times, times)
def test_line_solution_semigroup(fld, c, x0, v0, t0, t1, t2):
    x1, v1 = classical.line_solution(x0, v0, t0, t1, fld, c)
    direct = classical.line_solution(x0, v0, t0, t2, fld, c)
    composed = classical.line_solution(x1, v1, t1, t2, fld, c)
    scale = 1 + abs(direct[0]) + abs(direct[1])
    assert composed == pytest.approx(direct, abs=1e-9 * scale)


@given(fields, constants, st.floats(-5, 5, **finite), times, st.sampled_from(list(Gauge)))
def test_reflection_map_is_an_involution(fld, c, v, t, gauge):
    p = classical.canonical_momentum(ClassicalState(0.0, v, t, gauge), fld, c)
    once = classical.reflect_momentum(p, t, gauge, fld, c)
    twice = classical.reflect_momentum(once, t, gauge, fld, c)
    assert twice == pytest.approx(p, abs=1e-9 * (1 + abs(p)))


@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10, **finite), st.sampled_from(["constant", "bump", "linear"]))
def test_relative_bound_is_scale_invariant(seed, scale, family):
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    A = opanalysis.BoundedCoefficient.family(family)
    a = opanalysis.verify_relative_bound(A, opanalysis.TrialState(coeffs), 0.05, C)
    b = opanalysis.verify_relative_bound(A, opanalysis.TrialState(scale * coeffs), 0.05, C)
    assert a.holds and b.holds
    assert b.lhs == pytest.approx(scale**2 * a.lhs, rel=1e-10)


@given(st.integers(1, 30), st.integers(1, 30))
def test_commutator_closed_form(n, m):
    if n == m:
        return
    assert qbasis.commutator_PT_element(m, n, C) == pytest.approx(
        qbasis.commutator_PT_closed_form(m, n, C), rel=1e-12, abs=1e-12)
