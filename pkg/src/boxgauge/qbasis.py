"""Box eigenbasis and truncated operator matrices.

Index convention: matrices are 0-based arrays whose entry ``[n'-1, n-1]``
holds ``<phi_n'| O |phi_n>`` for mode numbers ``n', n >= 1``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainRangeError
from .model import PhysicalConstants

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SpectralState:
    """Coefficients ``c_n`` on the sine modes ``phi_1 ... phi_N``."""

    coeffs: np.ndarray
    consts: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))

    @property
    def N(self) -> int:
        return self.coeffs.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def populations(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    @classmethod
    def basis(cls, n: int, N: int, consts: PhysicalConstants | None = None) -> "SpectralState":
        c = np.zeros(N, dtype=complex)
        c[n - 1] = 1.0
        return cls(c, consts or PhysicalConstants())


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense truncation of an operator; Hermiticity is verified when declared."""

    entries: np.ndarray
    hermitian_flag: bool = False
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        object.__setattr__(self, "entries", m)
        if self.hermitian_flag:
            resid = self.hermiticity_residual()
            scale = max(1.0, float(np.max(np.abs(m))))
            if resid > HERMITIAN_TOL * scale:
                raise ValueError(f"matrix declared Hermitian has residual {resid:.3e}")

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries @ other.entries, label=f"{self.label}*{other.label}")
        return self.entries @ other

    def to_json(self, operator: str, theta: float | None = None) -> str:
        payload = {
            "N": self.N,
            "operator": operator,
            "theta": theta,
            "entries": [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in self.entries],
        }
        return json.dumps(payload)

    def write_csv(self, path):
        """Row-major; each cell becomes a ``re,im`` pair of columns."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for row in self.entries:
                cells = []
                for z in row:
                    cells += [format(float(z.real) + 0.0, ".17g"), format(float(z.imag) + 0.0, ".17g")]
                writer.writerow(cells)


def _modes(N: int) -> np.ndarray:
    if N < 1:
        raise ValueError("truncation order N must be >= 1")
    return np.arange(1, N + 1)


def eigenfunction(n: int, x, consts: PhysicalConstants):
    """sqrt(2/L) sin(n pi x / L) on [0, L]."""
    if n < 1:
        raise ValueError("mode number must be >= 1")
    L = consts.box_length
    xa = np.asarray(x, dtype=float)
    if np.any((xa < 0) | (xa > L)):
        raise DomainRangeError(f"x outside the box [0, {L}]")
    out = math.sqrt(2.0 / L) * np.sin(n * math.pi * xa / L)
    return float(out) if np.ndim(x) == 0 else out


def energy(n, consts: PhysicalConstants):
    """E_n = hbar^2 pi^2 n^2 / (2 m L^2)."""
    na = np.asarray(n)
    if np.any(na < 1):
        raise ValueError("mode number must be >= 1")
    e = consts.hbar**2 * math.pi**2 * na.astype(float) ** 2 / (2 * consts.mass * consts.box_length**2)
    return float(e) if np.ndim(n) == 0 else e


def matrix_T(N: int, consts: PhysicalConstants) -> OperatorMatrix:
    return OperatorMatrix(np.diag(energy(_modes(N), consts)).astype(complex), True, "T")


def _odd_pairs(N: int):
    n = _modes(N)
    row, col = np.meshgrid(n, n, indexing="ij")  # row = n', col = n
    return row, col, (row + col) % 2 == 1


def _mirror_upper(m: np.ndarray) -> np.ndarray:
    # rebuild the lower triangle from the upper one so the result is exactly Hermitian
    upper = np.triu(m, 1)
    return upper + upper.conj().T + np.diag(np.diag(m))


def matrix_P(N: int, consts: PhysicalConstants) -> OperatorMatrix:
    """Elements of (hbar/i) d/dx between sine modes.

    The truncated matrix is Hermitian even though the operator on the box is
    only symmetric: the boundary values of ``P phi_n`` are invisible here.
    """
    row, col, odd = _odd_pairs(N)
    m = np.zeros((N, N), dtype=complex)
    m[odd] = -4j * consts.hbar * row[odd] * col[odd] / (
        consts.box_length * (row[odd] ** 2 - col[odd] ** 2))
    return OperatorMatrix(_mirror_upper(m), True, "P")


def matrix_x(N: int, consts: PhysicalConstants) -> OperatorMatrix:
    L = consts.box_length
    row, col, odd = _odd_pairs(N)
    m = np.zeros((N, N), dtype=complex)
    m[odd] = -8 * L * row[odd] * col[odd] / (math.pi**2 * (row[odd] ** 2 - col[odd] ** 2) ** 2)
    m[np.diag_indices(N)] = L / 2
    return OperatorMatrix(_mirror_upper(m), True, "x")


def boundary_value_P(n: int, consts: PhysicalConstants) -> tuple[float, float]:
    """|(P phi_n)(0)| and |(P phi_n)(L)|; both nonzero for every n."""
    if n < 1:
        raise ValueError("mode number must be >= 1")
    L = consts.box_length
    slope = math.sqrt(2.0 / L) * n * math.pi / L
    left = abs(consts.hbar * slope * math.cos(0.0))
    right = abs(consts.hbar * slope * math.cos(n * math.pi))
    assert left > 0 and right > 0
    return left, right


def commutator_PT_element(n_prime: int, n: int, consts: PhysicalConstants) -> complex:
    """<phi_n'| [P, T] |phi_n> with T acting on the eigenstates on both sides.

    Equals (E_n - E_n') P_{n'n}; for odd n + n' this is
    2 i hbar^3 pi^2 n n' / (m L^3), zero otherwise.
    """
    if n_prime < 1 or n < 1:
        raise ValueError("mode numbers must be >= 1")
    if (n + n_prime) % 2 == 0:
        return 0j
    p = -4j * consts.hbar * n_prime * n / (consts.box_length * (n_prime**2 - n**2))
    return complex((energy(n, consts) - energy(n_prime, consts)) * p)


def commutator_PT_closed_form(n_prime: int, n: int, consts: PhysicalConstants) -> complex:
    if (n + n_prime) % 2 == 0:
        return 0j
    return 2j * consts.hbar**3 * math.pi**2 * n * n_prime / (consts.mass * consts.box_length**3)


def gauge_phase_nodes(N: int, theta: float, consts: PhysicalConstants) -> int:
    return max(64, math.ceil(8 * (N + abs(theta) * consts.box_length / math.pi)))


def matrix_gauge_phase(N: int, theta: float, consts: PhysicalConstants) -> OperatorMatrix:
    """Matrix of exp(-i theta x) by Gauss-Legendre quadrature.

    Unitary only in the limit N -> infinity; the truncation is a contraction.
    """
    L = consts.box_length
    nodes, weights = leggauss(gauge_phase_nodes(N, theta, consts))
    x = 0.5 * L * (nodes + 1.0)
    w = 0.5 * L * weights
    phi = math.sqrt(2.0 / L) * np.sin(np.outer(_modes(N), x) * math.pi / L)
    m = (phi * (w * np.exp(-1j * theta * x))) @ phi.T
    return OperatorMatrix(m, False, "gauge")
