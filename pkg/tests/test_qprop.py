import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from boxgauge import qbasis, qprop
from boxgauge.errors import ConfigurationError
from boxgauge.model import DrivingField, PhysicalConstants, eval_F, eval_f
from boxgauge.qbasis import SpectralState
from boxgauge.qprop import PropagationConfig, Scheme

C = PhysicalConstants()
COS = DrivingField.cosine(5.0, 2 * math.pi)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PropagationConfig(8, 0.0)
    with pytest.raises(ConfigurationError):
        PropagationConfig(1, 1e-3)
    assert PropagationConfig(4, 1e-3, "crank_nicolson").scheme is Scheme.CRANK_NICOLSON


def test_hamiltonians():
    H0 = qprop.hamiltonian_H0(0.3, 8, COS, C)
    assert H0.entries[0, 0] == pytest.approx(qbasis.energy(1, C) + eval_f(COS, 0.3) * 0.5)
    Hc = qprop.hamiltonian_Hchi(0.3, 8, COS, C)
    assert Hc.hermiticity_residual() <= 1e-12
    assert np.allclose(qprop.hamiltonian_H0(0.3, 8, DrivingField.zero(), C).entries,
                       qbasis.matrix_T(8, C).entries)
    assert np.allclose(qprop.hamiltonian_Hchi(0.0, 8, COS, C).entries, qbasis.matrix_T(8, C).entries)


def test_Hchi_at_different_times_do_not_commute():
    a = qprop.hamiltonian_Hchi(0.1, 10, COS, C).entries
    b = qprop.hamiltonian_Hchi(0.35, 10, COS, C).entries
    assert np.linalg.norm(a @ b - b @ a) > 1.0


@pytest.mark.parametrize("which", ["H0", "Hchi", "generic"])
def test_expm_apply_matches_scipy(which):
    rng = np.random.default_rng(3)
    if which == "H0":
        H = qprop.hamiltonian_H0(0.2, 12, COS, C).entries
    elif which == "Hchi":
        H = qprop.hamiltonian_Hchi(0.2, 12, COS, C).entries
    else:
        M = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        H = M + M.conj().T
    psi = rng.standard_normal((12, 2)) + 1j * rng.standard_normal((12, 2))
    ref = scipy.linalg.expm(-0.05j * H) @ psi
    assert np.max(np.abs(qprop.expm_hermitian_apply(H, psi, 0.05) - ref)) < 1e-12
    assert np.max(np.abs(qprop.expm_hermitian_apply(H, psi[:, 0], 0.05) - ref[:, 0])) < 1e-12


@pytest.mark.parametrize("scheme", list(Scheme))
def test_stationary_state_phase(scheme):
    cfg = PropagationConfig(6, 1e-3, scheme)
    out = qprop.propagate(SpectralState.basis(1, 6), qprop.h0_builder(6, DrivingField.zero(), C), 0.0, 0.4, cfg)
    e1 = qbasis.energy(1, C)
    if scheme is Scheme.MAGNUS_MIDPOINT:
        expected = np.exp(-1j * e1 * 0.4)
    else:
        # Crank-Nicolson phase is the Cayley transform of the exact one
        z = 0.5j * e1 * 1e-3
        expected = ((1 - z) / (1 + z)) ** 400
    assert out.coeffs[0] == pytest.approx(expected, abs=1e-12)
    assert np.all(out.coeffs[1:] == 0)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_norm_preserved_over_many_steps(scheme):
    cfg = PropagationConfig(16, 1e-4, scheme)
    out = qprop.propagate(SpectralState.basis(2, 16), qprop.hchi_builder(16, COS, C), 0.0, 1.0, cfg)
    assert abs(out.norm() - 1) <= 1e-10


@pytest.mark.parametrize("scheme", list(Scheme))
def test_second_order_self_convergence(scheme):
    # small N keeps E_N dt in the asymptotic range for Crank-Nicolson
    b = qprop.h0_builder(6, COS, C)
    s = SpectralState.basis(1, 6)

    def run(dt):
        return qprop.propagate(s, b, 0.0, 0.5, PropagationConfig(6, dt, scheme)).coeffs

    ref = run(1.25e-4)
    e1 = np.linalg.norm(run(1e-3) - ref)
    e2 = np.linalg.norm(run(5e-4) - ref)
    # with errors c h^2 the ideal ratio is (1 - 1/64) / (1/4 - 1/64) = 4.2
    assert 3.6 < e1 / e2 < 4.8


def test_schemes_agree_in_fine_limit():
    b = qprop.hchi_builder(10, COS, C)
    s = SpectralState.basis(1, 10)
    m = qprop.propagate(s, b, 0.0, 0.5, PropagationConfig(10, 2e-4, Scheme.MAGNUS_MIDPOINT))
    c = qprop.propagate(s, b, 0.0, 0.5, PropagationConfig(10, 2e-4, Scheme.CRANK_NICOLSON))
    assert np.linalg.norm(m.coeffs - c.coeffs) < 1e-4


def test_F2_phase_is_global():
    s = SpectralState(np.array([0.6, 0.8j, 0, 0, 0, 0, 0, 0]))
    cfg = PropagationConfig(8, 1e-3)
    a = qprop.propagate(s, qprop.hchi_builder(8, COS, C, True), 0.0, 0.7, cfg)
    b = qprop.propagate(s, qprop.hchi_builder(8, COS, C, False), 0.0, 0.7, cfg)
    assert np.max(np.abs(a.populations() - b.populations())) <= 1e-12
    # the phase is the midpoint-rule integral of alpha^2 F^2 / 2m
    tm = (np.arange(700) + 0.5) * 1e-3
    phase = np.sum(eval_F(COS, tm) ** 2) * 1e-3 / 2
    assert np.allclose(a.coeffs, np.exp(-1j * phase) * b.coeffs, atol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ConfigurationError):
        qprop.propagate(SpectralState.basis(1, 4), qprop.h0_builder(6, COS, C), 0.0, 0.1,
                        PropagationConfig(6, 1e-3))


def test_propagator_matrix_columns_and_samples():
    cfg = PropagationConfig(6, 1e-3)
    b = qprop.h0_builder(6, COS, C)
    U = qprop.propagator_matrix(b, 0.0, 0.2, cfg)
    s = qprop.propagate(SpectralState.basis(3, 6), b, 0.0, 0.2, cfg)
    assert np.allclose(U[:, 2], s.coeffs, atol=1e-14)
    samples = qprop.propagate_samples(SpectralState.basis(3, 6), b, 0.0, [0.2, 0.1], cfg)
    assert [t for t, _ in samples] == [0.1, 0.2]
    assert np.allclose(samples[-1][1].coeffs, s.coeffs, atol=1e-13)


def test_gauge_map_identity_at_t0_and_round_trip():
    s = SpectralState.basis(1, 64)
    assert np.allclose(qprop.gauge_map(s, 0.0, COS, C).coeffs, s.coeffs, atol=1e-14)
    errors = []
    for N in (32, 64, 128):
        s = SpectralState.basis(1, N)
        t = 0.25  # theta = F(t) = 5 / (2 pi)
        back = qprop.gauge_map(qprop.gauge_map(s, t, COS, C, inverse=True), t, COS, C)
        errors.append(np.linalg.norm(back.coeffs - s.coeffs))
    assert errors[0] > errors[1] > errors[2]
    assert errors[-1] < 1e-4


def test_gauge_map_norm_change_small_at_large_N():
    theta_field = DrivingField.constant(4.0)  # theta = 4 at t = 1
    s = SpectralState.basis(1, 128)
    mapped = qprop.gauge_map(s, 1.0, theta_field, C)
    assert abs(mapped.norm() - 1) <= 1e-5


def test_gauge_residual_zero_field_and_truncation_convergence():
    s16, s32 = SpectralState.basis(1, 16), SpectralState.basis(1, 32)
    z = qprop.gauge_equivalence_residual(s16, DrivingField.zero(), C, 0.3, PropagationConfig(16, 1e-3))
    assert z <= 1e-10
    r16 = qprop.gauge_equivalence_residual(s16, COS, C, 0.25, PropagationConfig(16, 1e-3))
    r32 = qprop.gauge_equivalence_residual(s32, COS, C, 0.25, PropagationConfig(32, 1e-3))
    assert r32 < r16


@pytest.mark.slow
def test_gauge_residual_one_period_N128():
    r = qprop.gauge_equivalence_residual(SpectralState.basis(1, 128), COS, C, 1.0, PropagationConfig(128, 1e-3))
    assert r <= 1e-4


def test_naive_propagator_properties():
    U = qprop.naive_propagator_chi(0.0, 1.0, 8, COS, C)
    assert "INCORRECT" in U.label
    assert qprop.unitarity_residual(U.entries) <= 1e-10
    Z = qprop.naive_propagator_chi(0.0, 0.6, 8, DrivingField.zero(), C).entries
    assert np.allclose(Z, np.diag(np.exp(-1j * 0.6 * qbasis.energy(np.arange(1, 9), C))), atol=1e-13)


def test_naive_integrals_against_closed_form():
    i1, i2 = qprop._integrals_of_F(0.0, 1.0, COS)
    w = 2 * math.pi
    assert i1 == pytest.approx(5 / w * (1 - math.cos(w)) / w, abs=1e-13)
    oracle = scipy.integrate.quad(lambda t: (5 / w * math.sin(w * t)) ** 2, 0, 1)[0]
    assert i2 == pytest.approx(oracle, rel=1e-10)


def test_compare_naive():
    cfg = PropagationConfig(8, 1e-3)
    d = qprop.compare_naive(0.0, 1.0, COS, C, cfg)
    z = qprop.compare_naive(0.0, 1.0, DrivingField.zero(), C, cfg)
    assert d.difference_norm > 1e-2 and z.difference_norm < 1e-10


def test_operator_norm_matches_svd():
    rng = np.random.default_rng(5)
    M = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    assert qprop.operator_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-6)
    assert qprop.operator_norm(np.zeros((3, 3))) == 0.0
