"""Driven particle on the line, on a periodic FFT grid.

The grid is a periodic stand-in for the real line: packets must stay in the
central half of the window, and leakage into the guard band is reported as
a ``HorizonError`` rather than silently aliased.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.integrate

from .classical import line_solution
from .errors import ConfigurationError, HorizonError
from .model import DrivingField, PhysicalConstants, eval_F, eval_f

EDGE_MASS_LIMIT = 1e-6


@dataclass(frozen=True)
class Grid:
    M: int
    x_min: float
    x_max: float

    def __post_init__(self):
        if self.M < 2 or self.M & (self.M - 1):
            raise ConfigurationError("grid size must be a power of two")
        if not self.x_max > self.x_min:
            raise ConfigurationError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.M

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.M)

    def momenta(self, hbar: float) -> np.ndarray:
        return 2 * math.pi * hbar * np.fft.fftfreq(self.M, d=self.dx)

    def central_mask(self) -> np.ndarray:
        width = self.x_max - self.x_min
        x = self.x
        return (x >= self.x_min + width / 4) & (x <= self.x_max - width / 4)


@dataclass(frozen=True)
class GridWavepacket:
    samples: np.ndarray
    grid: Grid
    t: float = 0.0
    consts: PhysicalConstants = dc_field(default_factory=PhysicalConstants)

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.dx)

    def mean_x(self) -> float:
        return float(np.sum(self.grid.x * np.abs(self.samples) ** 2) * self.grid.dx / self.norm_sq())

    def var_x(self) -> float:
        mx = self.mean_x()
        return float(np.sum((self.grid.x - mx) ** 2 * np.abs(self.samples) ** 2) * self.grid.dx / self.norm_sq())

    def mean_p(self) -> float:
        """<p> with the derivative taken spectrally."""
        p = self.grid.momenta(self.consts.hbar)
        dpsi = np.fft.ifft(p * np.fft.fft(self.samples))
        return float(np.real(np.sum(np.conj(self.samples) * dpsi)) * self.grid.dx / self.norm_sq())

    def edge_mass(self) -> float:
        outside = ~self.grid.central_mask()
        return float(np.sum(np.abs(self.samples[outside]) ** 2) * self.grid.dx)

    def with_samples(self, samples, t=None) -> "GridWavepacket":
        return GridWavepacket(samples, self.grid, self.t if t is None else t, self.consts)


def gaussian_packet(x0: float, p0: float, sigma: float, grid: Grid,
                    consts: PhysicalConstants | None = None, t: float = 0.0) -> GridWavepacket:
    """Minimum-uncertainty packet, |psi|^2 of standard deviation ``sigma``."""
    consts = consts or PhysicalConstants()
    if not sigma > 0:
        raise ConfigurationError("sigma must be positive")
    if x0 - 6 * sigma < grid.x_min or x0 + 6 * sigma > grid.x_max:
        raise ConfigurationError("packet needs a 6 sigma margin inside the window")
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * p0 * x / consts.hbar)
    psi /= math.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return GridWavepacket(psi.astype(complex), grid, t, consts)


def _kspace_phase(packet: GridWavepacket, phase_of_p) -> np.ndarray:
    p = packet.grid.momenta(packet.consts.hbar)
    return np.fft.ifft(np.exp(-1j * phase_of_p(p) / packet.consts.hbar) * np.fft.fft(packet.samples))


def analytic_propagate_chi(packet: GridWavepacket, t0: float, t1: float, field: DrivingField,
                           consts: PhysicalConstants) -> GridWavepacket:
    """Exact gauge-chi propagator for constant driving, applied in momentum space.

    Hchi(t) = (p - alpha F(t))^2 / 2m commute at different times on the line, so
    the propagator is exp[-(i/hbar) int (p - alpha F)^2/2m dt]; for a field whose
    reference time is t0 this is the familiar
    tau p^2/2m - (alpha f0/2m) tau^2 p + (alpha^2 f0^2/6m) tau^3.
    """
    if field.kind != "constant":
        raise ConfigurationError("analytic chi propagator requires a constant field")
    m, a = consts.mass, consts.alpha * field.f0
    u0, u1 = t0 - field.t0, t1 - field.t0
    tau = t1 - t0
    int_F = (u1**2 - u0**2) / 2          # in units of f0
    int_F2 = (u1**3 - u0**3) / 3         # in units of f0^2
    out = _kspace_phase(packet, lambda p: tau * p**2 / (2 * m) - a * int_F * p / m + a**2 * int_F2 / (2 * m))
    return packet.with_samples(out, t1)


def propagate_chi_line(packet: GridWavepacket, t0: float, t1: float, field: DrivingField,
                       consts: PhysicalConstants) -> GridWavepacket:
    """Gauge-chi propagator for arbitrary f(t) with the F and F^2 integrals by quadrature."""
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=500)
    int_F = scipy.integrate.quad(lambda s: eval_F(field, s), t0, t1, **opts)[0]
    int_F2 = scipy.integrate.quad(lambda s: eval_F(field, s) ** 2, t0, t1, **opts)[0]
    m, a = consts.mass, consts.alpha
    tau = t1 - t0
    out = _kspace_phase(packet, lambda p: tau * p**2 / (2 * m) - a * int_F * p / m + a**2 * int_F2 / (2 * m))
    return packet.with_samples(out, t1)


def gauge_phase_line(packet: GridWavepacket, t: float, field: DrivingField,
                     consts: PhysicalConstants, inverse: bool = False) -> GridWavepacket:
    """Multiply by exp(-i alpha F(t) x / hbar) (or its conjugate)."""
    theta = consts.alpha * eval_F(field, t) / consts.hbar
    sign = 1.0 if inverse else -1.0
    return packet.with_samples(packet.samples * np.exp(sign * 1j * theta * packet.grid.x))


def split_step_H0(packet: GridWavepacket, t0: float, t1: float, steps: int,
                  field: DrivingField, consts: PhysicalConstants) -> GridWavepacket:
    """Strang splitting for H0 = p^2/2m + alpha f(t) x: half potential, kinetic, half potential.

    The potential is evaluated at each step's midpoint.
    """
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    hbar, m = consts.hbar, consts.mass
    h = (t1 - t0) / steps
    x = packet.grid.x
    kin = np.exp(-1j * h * packet.grid.momenta(hbar) ** 2 / (2 * m * hbar))
    psi = packet.samples.copy()
    for j in range(steps):
        half_pot = np.exp(-0.5j * h * consts.alpha * eval_f(field, t0 + (j + 0.5) * h) * x / hbar)
        psi = half_pot * np.fft.ifft(kin * np.fft.fft(half_pot * psi))
    return packet.with_samples(psi, t1)


def bch_check(packet: GridWavepacket, tau: float, field: DrivingField,
              consts: PhysicalConstants, steps: int) -> float:
    """|| U(t1) Uchi(t1, t0) psi - U0(t1, t0) psi || with the right side by split-step.

    The packet is taken to live at the field's reference time so that
    U(t0) is the identity.
    """
    t0 = field.t0
    lhs = gauge_phase_line(analytic_propagate_chi(packet, t0, t0 + tau, field, consts),
                           t0 + tau, field, consts)
    rhs = split_step_H0(packet, t0, t0 + tau, steps, field, consts)
    return float(math.sqrt(np.sum(np.abs(lhs.samples - rhs.samples) ** 2) * packet.grid.dx))


def gauge_residual_line(packet: GridWavepacket, t0: float, t1: float, steps: int,
                        field: DrivingField, consts: PhysicalConstants) -> float:
    """General-f(t) version of ``bch_check``; the packet is a gauge-0 state at t0."""
    chi0 = gauge_phase_line(packet, t0, field, consts, inverse=True)
    lhs = gauge_phase_line(propagate_chi_line(chi0, t0, t1, field, consts), t1, field, consts)
    rhs = split_step_H0(packet, t0, t1, steps, field, consts)
    return float(math.sqrt(np.sum(np.abs(lhs.samples - rhs.samples) ** 2) * packet.grid.dx))


@dataclass(frozen=True)
class EhrenfestRow:
    t: float
    mean_x: float
    x_classical: float
    deviation: float
    mean_p: float
    var_x: float


def ehrenfest_check(packet: GridWavepacket, t_grid, field: DrivingField,
                    consts: PhysicalConstants, dt: float = 1e-3) -> list[EhrenfestRow]:
    """Compare <x>(t) under split-step H0 with the classical line solution."""
    times = sorted(float(t) for t in t_grid)
    x0 = packet.mean_x()
    v0 = packet.mean_p() / consts.mass
    t_start = packet.t
    rows = []
    current = packet
    for t in times:
        if t > current.t:
            steps = max(1, math.ceil((t - current.t) / dt - 1e-9))
            current = split_step_H0(current, current.t, t, steps, field, consts)
        edge = current.edge_mass()
        if edge > EDGE_MASS_LIMIT:
            raise HorizonError("packet reached the guard band", t=t, edge_mass=edge)
        xq = current.mean_x()
        xc, _ = line_solution(x0, v0, t_start, t, field, consts)
        rows.append(EhrenfestRow(t, xq, xc, abs(xq - xc), current.mean_p(), current.var_x()))
    return rows


def write_packet_csv(path, packet: GridWavepacket):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "re", "im", "abs2"])
        for x, z in zip(packet.grid.x, packet.samples):
            writer.writerow([format(x, ".17g"), format(z.real, ".17g"), format(z.imag, ".17g"),
                             format(abs(z) ** 2, ".17g")])


def write_moments_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "mean_x", "mean_p", "var_x"])
        for r in rows:
            writer.writerow([format(r.t, ".17g"), format(r.mean_x, ".17g"),
                             format(r.mean_p, ".17g"), format(r.var_x, ".17g")])
