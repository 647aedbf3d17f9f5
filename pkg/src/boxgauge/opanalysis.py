"""Generalized dilation operator D_A = (hbar/2i)(A d/dx + d/dx A) on the box.

Covers symmetry (boundary brackets), the relative bound of D_A with respect
to the kinetic operator T with explicit Kato-Rellich constants, and the
defect solutions of D_A psi = +-i psi.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.optimize
from numpy.polynomial.legendre import leggauss

from .errors import AnalysisError, ConfigurationError, DomainRangeError
from .model import PhysicalConstants
from .qbasis import energy

BOUND_CHECK_NODES = 512
INTEGRABILITY_MARGIN = 0.05


@dataclass(frozen=True)
class BoundedCoefficient:
    """A(x) with declared bounds |A| <= A0, |A'| <= A0_prime, checked on a node grid."""

    evaluator: Callable
    derivative: Callable
    A0: float
    A0_prime: float
    descriptor: str = "custom"
    box_length: float = 1.0

    def __post_init__(self):
        if self.A0 < 0 or self.A0_prime < 0:
            raise ConfigurationError("bounds must be non-negative")
        x = np.linspace(0.0, self.box_length, BOUND_CHECK_NODES)
        a = np.abs(np.broadcast_to(self.evaluator(x), x.shape))
        da = np.abs(np.broadcast_to(self.derivative(x), x.shape))
        slack = 1e-12 * max(1.0, self.A0, self.A0_prime)
        if np.max(a) > self.A0 + slack or np.max(da) > self.A0_prime + slack:
            raise ConfigurationError(
                f"coefficient {self.descriptor!r} exceeds its declared bounds "
                f"(max|A|={np.max(a):.6g}, max|A'|={np.max(da):.6g})")

    def A(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.evaluator(x), x.shape).astype(float)

    def dA(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.derivative(x), x.shape).astype(float)

    @classmethod
    def constant(cls, value: float = 1.0, consts: PhysicalConstants | None = None):
        L = (consts or PhysicalConstants()).box_length
        return cls(lambda x: np.full_like(x, value), lambda x: np.zeros_like(x),
                   abs(value), 0.0, f"constant({value:g})", L)

    @classmethod
    def linear(cls, consts: PhysicalConstants | None = None):
        """A(x) = x, which vanishes at the left wall."""
        L = (consts or PhysicalConstants()).box_length
        return cls(lambda x: x, lambda x: np.ones_like(x), L, 1.0, "linear", L)

    @classmethod
    def bump(cls, consts: PhysicalConstants | None = None):
        """A(x) = (1 + cos(2 pi x / L)) / 2."""
        L = (consts or PhysicalConstants()).box_length
        k = 2 * math.pi / L
        return cls(lambda x: 0.5 * (1 + np.cos(k * x)), lambda x: -0.5 * k * np.sin(k * x),
                   1.0, math.pi / L, "bump", L)

    @classmethod
    def family(cls, name: str, consts: PhysicalConstants | None = None):
        table = {"constant": cls.constant, "linear": cls.linear, "bump": cls.bump}
        if name not in table:
            raise ConfigurationError(f"unknown coefficient family {name!r}; choose from {sorted(table)}")
        return table[name](consts=consts)


@dataclass(frozen=True)
class TrialState:
    """Finite sine series sum_n c_n phi_n; lies in the domain of T by construction."""

    coeffs: np.ndarray
    consts: PhysicalConstants = PhysicalConstants()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    def _modes(self, x):
        L = self.consts.box_length
        xa = np.asarray(x, dtype=float)
        if np.any((xa < -1e-14 * L) | (xa > L * (1 + 1e-14))):
            raise DomainRangeError("x outside the box")
        k = np.arange(1, self.N + 1) * math.pi / L
        return xa, k, math.sqrt(2.0 / L)

    def value(self, x):
        xa, k, s = self._modes(x)
        return s * np.sin(np.multiply.outer(xa, k)) @ self.coeffs

    def derivative(self, x):
        xa, k, s = self._modes(x)
        return s * np.cos(np.multiply.outer(xa, k)) @ (k * self.coeffs)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def mean_T(self) -> float:
        return float(np.sum(energy(np.arange(1, self.N + 1), self.consts) * np.abs(self.coeffs) ** 2))

    def norm_sq_T(self) -> float:
        return float(np.sum(energy(np.arange(1, self.N + 1), self.consts) ** 2 * np.abs(self.coeffs) ** 2))


@dataclass(frozen=True)
class SmoothFunction:
    """Arbitrary smooth test function, not necessarily vanishing at the walls."""

    fn: Callable
    dfn: Callable

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.fn(x), x.shape).astype(complex)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.dfn(x), x.shape).astype(complex)


def apply_dilation(A: BoundedCoefficient, phi, x, consts: PhysicalConstants):
    """(hbar/2i)(2 A phi' + A' phi) at x."""
    out = consts.hbar / 2j * (2 * A.A(x) * phi.derivative(x) + A.dA(x) * phi.value(x))
    return complex(out) if np.ndim(x) == 0 else out


def _gl(n: int, L: float):
    nodes, weights = leggauss(n)
    return 0.5 * L * (nodes + 1.0), 0.5 * L * weights


def _node_count(*states) -> int:
    N = max((s.N for s in states if isinstance(s, TrialState)), default=32)
    return max(64, 8 * (N + 4))


def norm_sq_dilation(A: BoundedCoefficient, phi, consts: PhysicalConstants, nodes: int | None = None) -> float:
    x, w = _gl(nodes or _node_count(phi), consts.box_length)
    return float(np.sum(w * np.abs(apply_dilation(A, phi, x, consts)) ** 2))


def inner(psi, phi, consts: PhysicalConstants, nodes: int | None = None) -> complex:
    x, w = _gl(nodes or _node_count(psi, phi), consts.box_length)
    return complex(np.sum(w * np.conj(psi.value(x)) * phi.value(x)))


def adjoint_defect(A: BoundedCoefficient, psi, phi, consts: PhysicalConstants,
                   nodes: int | None = None) -> complex:
    """<psi|D_A phi> - <D_A psi|phi> by Gauss-Legendre quadrature."""
    x, w = _gl(nodes or _node_count(psi, phi), consts.box_length)
    Dphi = apply_dilation(A, phi, x, consts)
    Dpsi = apply_dilation(A, psi, x, consts)
    return complex(np.sum(w * (np.conj(psi.value(x)) * Dphi - np.conj(Dpsi) * phi.value(x))))


def symmetry_boundary_term(A: BoundedCoefficient, psi, phi, consts: PhysicalConstants) -> complex:
    """(hbar/i) [psi* A phi] evaluated between 0 and L."""
    ends = np.array([0.0, consts.box_length])
    g = np.conj(psi.value(ends)) * A.A(ends) * phi.value(ends)
    return complex(consts.hbar / 1j * (g[1] - g[0]))


# --------------------------------------------------------------------------
# relative bound

def admissible_a0_bound(A: BoundedCoefficient, consts: PhysicalConstants) -> float:
    k = (2 * A.A0 + A.A0_prime) * consts.mass * A.A0
    return math.inf if k == 0 else 1.0 / k


def _b0(a0: float, consts: PhysicalConstants) -> float:
    # E_n - a0 E_n^2 is decreasing once E_n > 1/(2 a0); scan a little past 2/a0
    e1 = energy(1, consts)
    n_cap = int(math.ceil(math.sqrt(2.0 / (a0 * e1)))) + 10
    En = energy(np.arange(1, n_cap + 1), consts)
    return max(0.0, float(np.max(En - a0 * En**2)))


@dataclass(frozen=True)
class KatoRellichConstants:
    a: float
    b: float
    b0: float
    a0: float


def kato_rellich_constants(A: BoundedCoefficient, a0: float, consts: PhysicalConstants) -> KatoRellichConstants:
    """a = (2A0+A0') m A0 a0 and b = (2A0+A0')(m A0 b0 + hbar^2 A0'/4).

    b0 is the smallest non-negative constant with <T> <= a0 ||T phi||^2 + b0 ||phi||^2.
    """
    bound = admissible_a0_bound(A, consts)
    if not (a0 > 0 and a0 < bound):
        raise ConfigurationError(f"a0 = {a0!r} is not admissible; need 0 < a0 < {bound!r}")
    b0 = _b0(a0, consts)
    k = 2 * A.A0 + A.A0_prime
    a = k * consts.mass * A.A0 * a0
    b = k * (consts.mass * A.A0 * b0 + consts.hbar**2 * A.A0_prime / 4)
    return KatoRellichConstants(a, b, b0, a0)


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool
    intermediate_rhs: float
    intermediate_holds: bool
    cauchy_schwarz_holds: bool


def verify_relative_bound(A: BoundedCoefficient, phi: TrialState, a0: float,
                          consts: PhysicalConstants, kr: KatoRellichConstants | None = None) -> BoundCheck:
    """Check ||D_A phi||^2 <= a ||T phi||^2 + b ||phi||^2 and each link leading to it."""
    kr = kr or kato_rellich_constants(A, a0, consts)
    lhs = norm_sq_dilation(A, phi, consts)
    nrm, mT, nT = phi.norm_sq(), phi.mean_T(), phi.norm_sq_T()
    mid = (2 * A.A0 + A.A0_prime) * (consts.mass * A.A0 * mT + consts.hbar**2 * A.A0_prime / 4 * nrm)
    rhs = kr.a * nT + kr.b * nrm
    tol = 1e-12 * max(rhs, 1.0)
    return BoundCheck(lhs, rhs, lhs <= rhs + tol, mid, lhs <= mid + tol,
                      mT**2 <= nT * nrm * (1 + 1e-12))


def _batch_lhs(A: BoundedCoefficient, C: np.ndarray, consts: PhysicalConstants) -> np.ndarray:
    """||D_A phi||^2 for each row of coefficients in C."""
    N = C.shape[1]
    L = consts.box_length
    x, w = _gl(max(64, 8 * (N + 4)), L)
    k = np.arange(1, N + 1) * math.pi / L
    s = math.sqrt(2.0 / L)
    S = s * np.sin(np.outer(x, k))
    dS = s * np.cos(np.outer(x, k)) * k
    D = consts.hbar / 2j * (2 * A.A(x)[:, None] * (dS @ C.T) + A.dA(x)[:, None] * (S @ C.T))
    return w @ np.abs(D) ** 2


def bound_audit(families=("constant", "bump", "linear"), trials: int = 1000, N: int = 32,
                a0_fraction: float = 0.5, seed: int = 0,
                consts: PhysicalConstants | None = None) -> list[dict]:
    """Monte-Carlo audit of the relative bound over random normalized sine series.

    Coefficients are complex Gaussians with a random power-law envelope so
    that both low- and high-mode dominated states are sampled. One report
    dict per family; a0 is ``a0_fraction`` of the admissible bound.
    """
    consts = consts or PhysicalConstants()
    rng = np.random.default_rng(seed)
    En = energy(np.arange(1, N + 1), consts)
    reports = []
    for name in families:
        A = BoundedCoefficient.family(name, consts)
        a0 = a0_fraction * admissible_a0_bound(A, consts)
        kr = kato_rellich_constants(A, a0, consts)
        decay = rng.uniform(0.0, 3.0, size=(trials, 1))
        C = (rng.standard_normal((trials, N)) + 1j * rng.standard_normal((trials, N)))
        C *= np.arange(1, N + 1)[None, :] ** (-decay)
        C /= np.linalg.norm(C, axis=1, keepdims=True)
        P = np.abs(C) ** 2
        lhs = _batch_lhs(A, C, consts)
        nrm = P.sum(axis=1)
        mid = (2 * A.A0 + A.A0_prime) * (consts.mass * A.A0 * (P @ En) + consts.hbar**2 * A.A0_prime / 4 * nrm)
        rhs = kr.a * (P @ En**2) + kr.b * nrm
        margin = (rhs - lhs) / rhs
        reports.append({
            "A": A.descriptor, "a0": a0, "a": kr.a, "b": kr.b, "b0": kr.b0,
            "trials": int(trials),
            "violations": int(np.sum(lhs > rhs * (1 + 1e-12))),
            "intermediate_violations": int(np.sum(lhs > mid * (1 + 1e-12))),
            "worst_margin": float(np.min(margin)),
            "seed": int(seed),
        })
    return reports


def bound_audit_json(reports: list[dict]) -> str:
    return json.dumps(reports, indent=2)


# --------------------------------------------------------------------------
# defect solutions (hbar = 1)

@dataclass(frozen=True)
class DefectSolutions:
    psi_plus: Callable
    psi_minus: Callable
    n_plus: int
    n_minus: int
    exponents: dict


def _check_sign_definite(A: BoundedCoefficient, L: float):
    x = np.linspace(0.0, L, 4097)[1:-1]
    a = A.A(x)
    i = int(np.argmin(np.abs(a)))
    # a double zero need not land on a node, so polish the smallest |A|
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, len(x) - 1)]
    res = scipy.optimize.minimize_scalar(lambda s: abs(float(A.A(s))), bounds=(lo, hi),
                                         method="bounded", options={"xatol": 1e-14 * L})
    a_min = min(float(np.min(np.abs(a))), float(res.fun))
    if a_min <= 1e-12 * float(np.max(np.abs(a))) or (np.any(a > 0) and np.any(a < 0)):
        raise AnalysisError("A vanishes or changes sign inside the box",
                            descriptor=A.descriptor, min_abs_A=a_min, near_x=float(res.x))


def _quad(fn, a, b):
    return scipy.integrate.quad(fn, a, b, epsabs=1e-14, epsrel=1e-13, limit=500)[0]


def _inner_integral(A: BoundedCoefficient, L: float, x: float) -> float:
    return _quad(lambda s: 1.0 / float(A.A(s)), 0.5 * L, x)


def _log_abs2(A: BoundedCoefficient, sign: int, x, I):
    return -np.log(np.abs(A.A(x))) + 2 * sign * I


def _endpoint_exponent(A: BoundedCoefficient, L: float, sign: int, left: bool,
                       levels=range(8, 41)) -> float:
    """Slope gamma of log|psi|^2 against log d at dyadic distances d from a wall."""
    ds, logs = [], []
    prev, I = 0.5 * L, 0.0
    for k in levels:
        d = L * 2.0 ** (-k)
        x = d if left else L - d
        I += _quad(lambda s: 1.0 / float(A.A(s)), prev, x)
        prev = x
        ds.append(d)
        logs.append(float(_log_abs2(A, sign, x, I)))
    ld, lv = np.log(ds), np.array(logs)
    if not np.all(np.isfinite(lv)):
        raise AnalysisError("defect solution not finite near a wall", left=left, sign=sign)
    tail = slice(-12, None)
    gamma = np.polyfit(ld[tail], lv[tail], 1)[0]
    return float(gamma)


def defect_solutions(A: BoundedCoefficient, consts: PhysicalConstants) -> DefectSolutions:
    """psi_+-(x) = |A|^(-1/2) exp(+- int_{L/2}^x dx'/A), with hbar = 1.

    These solve A psi' = (+-1 - A'/2) psi. Each counts toward the defect
    index when it is square integrable, decided from the power-law exponent
    of |psi|^2 at both walls.
    """
    L = consts.box_length
    _check_sign_definite(A, L)

    def make(sign):
        def psi(x):
            xa = np.atleast_1d(np.asarray(x, dtype=float))
            I = np.array([_inner_integral(A, L, xi) for xi in xa])
            out = np.exp(-0.5 * np.log(np.abs(A.A(xa))) + sign * I)
            return float(out[0]) if np.ndim(x) == 0 else out
        return psi

    exps, counts = {}, {}
    for sign, key in ((1, "plus"), (-1, "minus")):
        gl = _endpoint_exponent(A, L, sign, left=True)
        gr = _endpoint_exponent(A, L, sign, left=False)
        exps[key] = (gl, gr)
        counts[key] = int(gl > -1 + INTEGRABILITY_MARGIN and gr > -1 + INTEGRABILITY_MARGIN)
    return DefectSolutions(make(1), make(-1), counts["plus"], counts["minus"], exps)


_FD8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def defect_residual(A: BoundedCoefficient, sol: DefectSolutions, consts: PhysicalConstants,
                    n_nodes: int = 17, h: float | None = None) -> float:
    """max |A psi' - (+-1 - A'/2) psi| / max|psi| over interior nodes.

    psi' comes from an eighth-order central difference of the quadrature-built
    psi, so this is an independent plug-back test of the closed form.
    """
    L = consts.box_length
    h = h or 4e-3 * L
    x = np.linspace(0.25 * L, 0.75 * L, n_nodes)
    offsets = np.arange(-4, 5) * h
    worst = 0.0
    for sign, psi in ((1, sol.psi_plus), (-1, sol.psi_minus)):
        vals = psi(np.add.outer(x, offsets).ravel()).reshape(len(x), 9)
        dpsi = vals @ _FD8 / h
        p = vals[:, 4]
        resid = A.A(x) * dpsi - (sign - 0.5 * A.dA(x)) * p
        worst = max(worst, float(np.max(np.abs(resid)) / np.max(np.abs(p))))
    return worst
