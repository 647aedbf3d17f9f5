"""Time-ordered propagation of the driven box in both gauges.

Gauge 0:   H0(t)   = T + alpha f(t) x
Gauge chi: Hchi(t) = T - (alpha/m) F(t) P  [+ alpha^2 F(t)^2 / 2m]

The two are related by the Goeppert-Mayer phase exp(-i alpha F(t) x / hbar).
``naive_propagator_chi`` builds the single-exponential propagator that one
gets by pretending the Hchi(t) commute at different times; it is kept only
as a falsifiable baseline.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import ConfigurationError, NumericalFailure
from .model import DrivingField, PhysicalConstants, eval_F, eval_f
from .qbasis import OperatorMatrix, SpectralState, matrix_gauge_phase, matrix_P, matrix_T, matrix_x

NAIVE_LABEL = "INCORRECT: single exponential assuming [Hchi(t), Hchi(t')] = 0"


class Scheme(enum.Enum):
    MAGNUS_MIDPOINT = "magnus"
    CRANK_NICOLSON = "crank_nicolson"


@dataclass(frozen=True)
class PropagationConfig:
    N: int
    dt: float
    scheme: Scheme = Scheme.MAGNUS_MIDPOINT
    include_F2_phase: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.N < 2:
            raise ConfigurationError("N must be at least 2")
        if not isinstance(self.scheme, Scheme):
            object.__setattr__(self, "scheme", Scheme(self.scheme))


@functools.lru_cache(maxsize=32)
def _static_matrices(N: int, consts: PhysicalConstants):
    T = matrix_T(N, consts).entries.real.copy()
    X = matrix_x(N, consts).entries.real.copy()
    P = matrix_P(N, consts).entries.copy()
    for m in (T, X, P):
        m.setflags(write=False)
    return T, X, P


def hamiltonian_H0(t: float, N: int, field: DrivingField, consts: PhysicalConstants) -> OperatorMatrix:
    T, X, _ = _static_matrices(N, consts)
    return OperatorMatrix(T + consts.alpha * eval_f(field, t) * X, True, "H0")


def hamiltonian_Hchi(t: float, N: int, field: DrivingField, consts: PhysicalConstants,
                     include_F2_phase: bool = True) -> OperatorMatrix:
    T, _, P = _static_matrices(N, consts)
    F = eval_F(field, t)
    H = T - (consts.alpha / consts.mass) * F * P
    if include_F2_phase:
        H = H + (consts.alpha**2 * F**2 / (2 * consts.mass)) * np.eye(N)
    return OperatorMatrix(H, True, "Hchi")


def h0_builder(N: int, field: DrivingField, consts: PhysicalConstants) -> Callable[[float], np.ndarray]:
    T, X, _ = _static_matrices(N, consts)
    return lambda t: T + consts.alpha * eval_f(field, t) * X


def hchi_builder(N: int, field: DrivingField, consts: PhysicalConstants,
                 include_F2_phase: bool = True) -> Callable[[float], np.ndarray]:
    T, _, P = _static_matrices(N, consts)
    eye = np.eye(N)
    k = consts.alpha / consts.mass

    def build(t):
        F = eval_F(field, t)
        H = T - k * F * P
        if include_F2_phase:
            H = H + (consts.alpha**2 * F**2 / (2 * consts.mass)) * eye
        return H
    return build


# --------------------------------------------------------------------------
# stepping

def _checkerboard_phase(N: int) -> np.ndarray:
    # diag(i^n): conjugating by it makes Hchi real symmetric
    return 1j ** np.arange(1, N + 1)


def _eig(H: np.ndarray):
    """(w, V, D) with H = D V diag(w) V^H D^H; D is None unless the phase trick applies."""
    if not np.iscomplexobj(H) or not np.any(H.imag):
        w, V = np.linalg.eigh(np.real(H))
        return w, V, None
    D = _checkerboard_phase(H.shape[0])
    Hr = D.conj()[:, None] * H * D[None, :]
    if np.max(np.abs(Hr.imag)) <= 1e-14 * max(1.0, float(np.max(np.abs(Hr.real)))):
        w, V = np.linalg.eigh(Hr.real)
        return w, V, D
    w, V = np.linalg.eigh(H)
    return w, V, None


def _apply_eig(eig, psi: np.ndarray, tau: float) -> np.ndarray:
    w, V, D = eig

    def col(a):
        return a.reshape((-1,) + (1,) * (psi.ndim - 1))

    vec = psi if D is None else col(D.conj()) * psi
    out = V @ (col(np.exp(-1j * tau * w)) * (V.conj().T @ vec))
    return out if D is None else col(D) * out


def expm_hermitian_apply(H: np.ndarray, psi: np.ndarray, tau: float) -> np.ndarray:
    """exp(-i tau H) psi for Hermitian H, via eigendecomposition.

    Real-symmetric problems (H0, and Hchi after a diagonal phase change)
    go through the cheaper real solver. ``psi`` may be a vector or a matrix
    whose columns are propagated.
    """
    return _apply_eig(_eig(H), psi, tau)


def _crank_nicolson_step(H: np.ndarray, psi: np.ndarray, tau: float) -> np.ndarray:
    eye = np.eye(H.shape[0])
    lhs = eye + 0.5j * tau * H
    rhs = (eye - 0.5j * tau * H) @ psi
    try:
        return scipy.linalg.solve(lhs, rhs, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalFailure("Crank-Nicolson solve failed", tau=tau) from exc


def _n_steps(t0: float, t1: float, dt: float) -> int:
    return max(1, math.ceil(abs(t1 - t0) / dt - 1e-9))


def propagate_array(psi: np.ndarray, H_builder, t0: float, t1: float,
                    config: PropagationConfig, hbar: float = 1.0) -> np.ndarray:
    """Propagate a coefficient vector (or the columns of a matrix) from t0 to t1."""
    psi = np.array(psi, dtype=complex)
    if psi.shape[0] != config.N:
        raise ConfigurationError(f"state dimension {psi.shape[0]} != N = {config.N}")
    if t1 == t0:
        return psi
    n = _n_steps(t0, t1, config.dt)
    h = (t1 - t0) / n
    tau = h / hbar
    prev_H, eig = None, None
    for j in range(n):
        H = H_builder(t0 + (j + 0.5) * h)
        if isinstance(H, OperatorMatrix):
            H = H.entries
        if config.scheme is Scheme.MAGNUS_MIDPOINT:
            # constant stretches (e.g. f = 0) reuse the last eigendecomposition
            if prev_H is None or not np.array_equal(H, prev_H):
                prev_H, eig = H, _eig(H)
            psi = _apply_eig(eig, psi, tau)
        else:
            psi = _crank_nicolson_step(H, psi, tau)
    return psi


def propagate(state: SpectralState, H_builder, t0: float, t1: float,
              config: PropagationConfig) -> SpectralState:
    """Advance ``state`` under ``H_builder(t)`` with the configured scheme."""
    out = propagate_array(state.coeffs, H_builder, t0, t1, config, state.consts.hbar)
    return SpectralState(out, state.consts)


def propagate_samples(state: SpectralState, H_builder, t0: float, sample_times: Sequence[float],
                      config: PropagationConfig) -> list[tuple[float, SpectralState]]:
    out = []
    t = t0
    for ts in sorted(sample_times):
        state = propagate(state, H_builder, t, ts, config)
        t = ts
        out.append((ts, state))
    return out


def propagator_matrix(H_builder, t0: float, t1: float, config: PropagationConfig,
                      hbar: float = 1.0) -> np.ndarray:
    """Time-ordered propagator, obtained by propagating the identity."""
    return propagate_array(np.eye(config.N, dtype=complex), H_builder, t0, t1, config, hbar)


# --------------------------------------------------------------------------
# gauge map and diagnostics

def gauge_map(state: SpectralState, t: float, field: DrivingField, consts: PhysicalConstants,
              inverse: bool = False) -> SpectralState:
    """Apply U(t) = exp(-i alpha F(t) x / hbar), or its adjoint when ``inverse``.

    ``inverse=True`` takes a gauge-0 state to gauge chi.
    """
    theta = consts.alpha * eval_F(field, t) / consts.hbar
    U = matrix_gauge_phase(state.N, theta, consts).entries
    M = U.conj().T if inverse else U
    return SpectralState(M @ state.coeffs, state.consts)


def gauge_equivalence_residual(initial: SpectralState, field: DrivingField,
                               consts: PhysicalConstants, t: float,
                               config: PropagationConfig) -> float:
    """|| Phi_0(t) - U(t) Phi_chi(t) || with both runs started from ``initial`` at field.t0."""
    t0 = field.t0
    phi0 = propagate(initial, h0_builder(config.N, field, consts), t0, t, config)
    start_chi = gauge_map(initial, t0, field, consts, inverse=True)
    phichi = propagate(start_chi, hchi_builder(config.N, field, consts, True), t0, t, config)
    mapped = gauge_map(phichi, t, field, consts)
    return float(np.linalg.norm(phi0.coeffs - mapped.coeffs))


def _integrals_of_F(t0: float, t1: float, field: DrivingField) -> tuple[float, float]:
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=500)
    i1 = scipy.integrate.quad(lambda s: eval_F(field, s), t0, t1, **opts)[0]
    i2 = scipy.integrate.quad(lambda s: eval_F(field, s) ** 2, t0, t1, **opts)[0]
    return i1, i2


def naive_propagator_chi(t0: float, t1: float, N: int, field: DrivingField,
                         consts: PhysicalConstants) -> OperatorMatrix:
    """exp[-(i/hbar)(T (t1-t0) - (alpha/m) P int F + (alpha^2/2m) int F^2)].  INCORRECT by design."""
    T, _, P = _static_matrices(N, consts)
    int_F, int_F2 = _integrals_of_F(t0, t1, field)
    G = T * (t1 - t0) - (consts.alpha / consts.mass) * int_F * P \
        + (consts.alpha**2 / (2 * consts.mass)) * int_F2 * np.eye(N)
    U = expm_hermitian_apply(G, np.eye(N, dtype=complex), 1.0 / consts.hbar)
    return OperatorMatrix(U, False, NAIVE_LABEL)


def operator_norm(M: np.ndarray, iterations: int = 100) -> float:
    """Largest singular value by power iteration on M^H M from a fixed start vector."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[1]
    v = np.linspace(1.0, 2.0, n) + 0.5j * np.cos(np.arange(n))
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(iterations):
        w = M.conj().T @ (M @ v)
        sigma2 = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return math.sqrt(max(sigma2, 0.0))


def unitarity_residual(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


@dataclass(frozen=True)
class NaiveComparison:
    difference_norm: float
    naive_unitarity: float
    ordered_unitarity: float
    label: str = NAIVE_LABEL


def compare_naive(t0: float, t1: float, field: DrivingField, consts: PhysicalConstants,
                  config: PropagationConfig) -> NaiveComparison:
    naive = naive_propagator_chi(t0, t1, config.N, field, consts).entries
    ordered = propagator_matrix(hchi_builder(config.N, field, consts, True), t0, t1, config, consts.hbar)
    return NaiveComparison(operator_norm(naive - ordered), unitarity_residual(naive),
                           unitarity_residual(ordered))
