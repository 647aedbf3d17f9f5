"""Classical driven particle on the line and in the box.

Between walls the motion solves ``m x'' + alpha f(t) = 0`` in closed form;
the walls reverse the velocity. Trajectories are gauge independent; the
gauge only changes the canonical momentum (``m v`` versus ``m v + alpha F``).
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from . import backend
from .errors import ConfigurationError, DomainRangeError, NumericalFailure
from .model import DrivingField, PhysicalConstants, eval_F, eval_f, eval_xi, eval_xi_dot


class Gauge(enum.Enum):
    ZERO = "gauge0"
    CHI = "gauge_chi"


class Wall(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class ClassicalState:
    x: float
    v: float
    t: float
    gauge: Gauge = Gauge.ZERO


@dataclass(frozen=True)
class ReflectionEvent:
    t_hit: float
    wall: Wall
    v_in: float
    v_out: float


# --------------------------------------------------------------------------
# line

def line_solution(x0: float, v0: float, t0: float, t: float,
                  field: DrivingField, consts: PhysicalConstants) -> tuple[float, float]:
    """Position and velocity at ``t`` of the unconfined particle started at ``(x0, v0, t0)``."""
    xi_dot0 = eval_xi_dot(field, t0, consts)
    x = x0 + (t - t0) * (v0 - xi_dot0) + eval_xi(field, t, consts) - eval_xi(field, t0, consts)
    v = v0 + eval_xi_dot(field, t, consts) - xi_dot0
    return x, v


def bounded_orbit_velocity(field: DrivingField, t0: float, consts: PhysicalConstants) -> float:
    """Initial velocity that cancels the secular drift under cosine driving.

    With ``x'' = -(alpha f0/m) cos(w t)`` the mean velocity vanishes iff
    ``v(t0) = -(alpha f0 / (m w)) sin(w t0)``.
    """
    if field.kind != "cosine":
        raise ConfigurationError("bounded orbits are defined for cosine driving only")
    return -consts.alpha * field.f0 / (consts.mass * field.omega) * math.sin(field.omega * t0)


# --------------------------------------------------------------------------
# momenta and reflections

def canonical_momentum(state: ClassicalState, field: DrivingField, consts: PhysicalConstants) -> float:
    if state.gauge is Gauge.ZERO:
        return consts.mass * state.v
    return consts.mass * state.v + consts.alpha * eval_F(field, state.t)


def velocity_from_momentum(p: float, t: float, gauge: Gauge, field: DrivingField,
                           consts: PhysicalConstants) -> float:
    if gauge is Gauge.ZERO:
        return p / consts.mass
    return (p - consts.alpha * eval_F(field, t)) / consts.mass


def reflect_momentum(p: float, t: float, gauge: Gauge, field: DrivingField,
                     consts: PhysicalConstants) -> float:
    """Wall map for the canonical momentum: ``p -> -p`` in gauge 0, ``p -> -p + 2 alpha F(t)`` in gauge chi."""
    if gauge is Gauge.ZERO:
        return -p
    return -p + 2.0 * consts.alpha * eval_F(field, t)


# --------------------------------------------------------------------------
# box flights

_WALLS = {backend.WALL_LEFT: Wall.LEFT, backend.WALL_RIGHT: Wall.RIGHT}


def _kernel_args(field: DrivingField, consts: PhysicalConstants):
    kind = backend.KIND_COSINE if field.kind == "cosine" else backend.KIND_CONSTANT
    return kind, field.f0, field.omega, consts.alpha / consts.mass, consts.box_length


class _TabulatedFlight:
    """Interior motion under a piecewise-linear f, advanced by RK4 steps.

    Steps never straddle a sample node, so on each step f is linear and RK4
    reproduces the cubic flight exactly; wall crossings inside a step are the
    roots of that cubic.
    """

    def __init__(self, field: DrivingField, consts: PhysicalConstants, h_max: float = 1e-2):
        self.field = field
        self.k = consts.alpha / consts.mass
        self.box = consts.box_length
        self.h_max = h_max
        self.nodes = field._nodes

    def _rk4(self, x, v, t, h):
        k = self.k
        g0 = -k * eval_f(self.field, t)
        gm = -k * eval_f(self.field, t + 0.5 * h)
        g1 = -k * eval_f(self.field, t + h)
        # y = (x, v), y' = (v, g(t))
        k1x, k1v = v, g0
        k2x, k2v = v + 0.5 * h * k1v, gm
        k3x, k3v = v + 0.5 * h * k2v, gm
        k4x, k4v = v + h * k3v, g1
        x_new = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v_new = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        return x_new, v_new

    def _step_end(self, t, t_target):
        idx = np.searchsorted(self.nodes, t, side="right")
        t_next = self.nodes[idx] if idx < len(self.nodes) else math.inf
        return min(t + self.h_max, t_next, t_target)

    def _first_crossing(self, x, v, t, h):
        """Earliest s in (0, h] with x(s) on a wall, or None."""
        g0 = -self.k * eval_f(self.field, t)
        g1 = -self.k * eval_f(self.field, t + h)
        c = (g1 - g0) / h
        best = None
        for wall, target in ((backend.WALL_LEFT, 0.0), (backend.WALL_RIGHT, self.box)):
            # x + v s + g0 s^2/2 + c s^3/6 - target
            coeffs = [c / 6.0, g0 / 2.0, v, x - target]
            while coeffs and coeffs[0] == 0.0:
                coeffs = coeffs[1:]
            if len(coeffs) < 2:
                continue
            for r in np.roots(coeffs):
                if abs(r.imag) > 1e-9 * max(1.0, abs(r.real)):
                    continue
                s = r.real
                if s <= 1e-14 or s > h * (1 + 1e-12):
                    continue
                s = self._polish(x, v, t, min(s, h), target)
                if s > 1e-14 and (best is None or s < best[0]):
                    best = (s, wall)
        return best

    def _polish(self, x, v, t, s, target):
        for _ in range(50):
            xs, vs = self._rk4(x, v, t, s)
            if vs == 0.0:
                break
            ds = (xs - target) / vs
            s -= ds
            if abs(ds) < 1e-13:
                break
        return s

    def next_hit(self, x, v, t, t_max):
        while t < t_max:
            t_end = self._step_end(t, t_max)
            h = t_end - t
            hit = self._first_crossing(x, v, t, h)
            if hit is not None:
                s, wall = hit
                _, v_in = self._rk4(x, v, t, s)
                return True, t + s, wall, v_in
            x, v = self._rk4(x, v, t, h)
            t = t_end
        return False, t_max, -1, v

    def advance(self, x, v, t, t_target, events=None, max_events=10_000_000):
        n = 0
        while t < t_target:
            t_end = self._step_end(t, t_target)
            h = t_end - t
            hit = self._first_crossing(x, v, t, h)
            if hit is None:
                x, v = self._rk4(x, v, t, h)
                t = t_end
                continue
            s, wall = hit
            _, v_in = self._rk4(x, v, t, s)
            t = t + s
            x = 0.0 if wall == backend.WALL_LEFT else self.box
            v = -v_in
            n += 1
            if n > max_events:
                raise NumericalFailure("too many reflections", t=t, max_events=max_events)
            if events is not None:
                events.append((t, wall, v_in, -v_in))
        return x, v, t_target, n


class _Mover:
    """Uniform advance/next-hit interface over the kernel and the tabulated integrator."""

    def __init__(self, field: DrivingField, consts: PhysicalConstants):
        self.field = field
        if field.kind == "tabulated":
            self._tab = _TabulatedFlight(field, consts)
        else:
            self._tab = None
            self._args = _kernel_args(field, consts)

    def check_time(self, t):
        lo, hi = self.field.time_range
        if not lo <= t <= hi:
            raise DomainRangeError(f"time {t} outside tabulated field range [{lo}, {hi}]")

    def next_hit(self, x, v, t, t_max):
        if self._tab is not None:
            self.check_time(t_max)
            return self._tab.next_hit(x, v, t, t_max)
        return backend.next_hit(x, v, t, t_max, *self._args)

    def advance(self, x, v, t, t_target, events=None):
        if self._tab is not None:
            self.check_time(t_target)
            return self._tab.advance(x, v, t, t_target, events)
        return backend.advance(x, v, t, t_target, *self._args, events)


def _check_inside(state: ClassicalState, box: float, strict_interior: bool):
    if not 0.0 <= state.x <= box:
        raise DomainRangeError(f"x = {state.x} outside the box [0, {box}]")
    if strict_interior and (state.x == 0.0 and state.v <= 0.0 or state.x == box and state.v >= 0.0):
        raise DomainRangeError("state on a wall must move into the box")


def wall_hit_time(state: ClassicalState, field: DrivingField, consts: PhysicalConstants,
                  t_max: float) -> ReflectionEvent | None:
    """First wall contact of the interior flight in ``(state.t, t_max]``."""
    _check_inside(state, consts.box_length, strict_interior=True)
    found, t_hit, wall, v_in = _Mover(field, consts).next_hit(state.x, state.v, state.t, t_max)
    if not found:
        return None
    return ReflectionEvent(t_hit, _WALLS[wall], v_in, -v_in)


def simulate_box(initial: ClassicalState, field: DrivingField, consts: PhysicalConstants,
                 t_end: float, sample_times: Sequence[float] | None = None,
                 n_samples: int = 101) -> tuple[list[ClassicalState], list[ReflectionEvent]]:
    """Event-driven box trajectory sampled at ``sample_times`` (default: uniform grid to ``t_end``)."""
    _check_inside(initial, consts.box_length, strict_interior=False)
    if t_end < initial.t:
        raise ConfigurationError("t_end precedes the initial time")
    if sample_times is None:
        sample_times = np.linspace(initial.t, t_end, n_samples)
    times = sorted(float(s) for s in sample_times)
    if times and (times[0] < initial.t or times[-1] > t_end):
        raise ConfigurationError("sample times must lie within [initial.t, t_end]")
    mover = _Mover(field, consts)
    raw_events: list = []
    trajectory = []
    x, v, t = initial.x, initial.v, initial.t
    for ts in times:
        x, v, t, _ = mover.advance(x, v, t, ts, raw_events)
        trajectory.append(ClassicalState(x, v, t, initial.gauge))
    if t < t_end:
        mover.advance(x, v, t, t_end, raw_events)
    events = [ReflectionEvent(th, _WALLS[w], vi, vo) for th, w, vi, vo in raw_events]
    return trajectory, events


# --------------------------------------------------------------------------
# chaos diagnostics

@dataclass(frozen=True)
class LyapunovResult:
    estimate: float
    elapsed: float
    renormalizations: int
    delta0: float


def lyapunov_run(initial: ClassicalState, field: DrivingField, consts: PhysicalConstants,
                 horizon: float, renorm_interval: float, delta0: float = 1e-9) -> LyapunovResult:
    """Two-trajectory (Benettin) estimate of the largest Lyapunov exponent.

    A shadow trajectory is kept at phase-space distance ``delta0`` (metric
    ``sqrt(dx^2 + dv^2)``) and re-scaled every ``renorm_interval``. When the
    pair straddles a reflection at a renormalization time (one has bounced,
    the other not yet), both are advanced past the pending bounce first so the
    comparison is never made across a velocity flip.
    """
    if renorm_interval <= 0 or horizon < 50 * renorm_interval:
        raise ConfigurationError("horizon must cover at least 50 renormalization intervals")
    box = consts.box_length
    _check_inside(initial, box, strict_interior=False)
    mover = _Mover(field, consts)
    ref = [initial.x, initial.v]
    direction = (1.0, 0.0) if initial.x + delta0 <= box else (-1.0, 0.0)
    sh = [ref[0] + delta0 * direction[0], ref[1] + delta0 * direction[1]]
    t = initial.t
    t_stop = initial.t + horizon
    log_sum = 0.0
    count = 0
    while t < t_stop - 1e-12 * max(1.0, abs(t_stop)):
        t_next = min(t + renorm_interval, t_stop)
        xr, vr, _, nr = mover.advance(ref[0], ref[1], t, t_next)
        xs, vs, _, ns = mover.advance(sh[0], sh[1], t, t_next)
        t_cur = t_next
        for _ in range(8):
            if nr == ns:
                break
            # advance the pair until the lagging one has bounced too
            if nr < ns:
                found, t_hit, _, _ = mover.next_hit(xr, vr, t_cur, t_cur + renorm_interval)
            else:
                found, t_hit, _, _ = mover.next_hit(xs, vs, t_cur, t_cur + renorm_interval)
            if not found:
                break
            t_sync = t_hit + 1e-9 * renorm_interval
            xr, vr, _, dr = mover.advance(xr, vr, t_cur, t_sync)
            xs, vs, _, ds = mover.advance(xs, vs, t_cur, t_sync)
            nr += dr
            ns += ds
            t_cur = t_sync
        dx, dv = xs - xr, vs - vr
        dist = math.hypot(dx, dv)
        if not dist > 0.0 or not math.isfinite(dist):
            raise NumericalFailure("degenerate separation in Lyapunov estimate", t=t_cur, distance=dist)
        log_sum += math.log(dist / delta0)
        count += 1
        ux, uv = dx / dist, dv / dist
        nx = xr + delta0 * ux
        if not 0.0 <= nx <= box:
            ux, uv = -ux, -uv
            nx = xr + delta0 * ux
        ref = [xr, vr]
        sh = [nx, vr + delta0 * uv]
        t = t_cur
    elapsed = t - initial.t
    return LyapunovResult(log_sum / elapsed, elapsed, count, delta0)


def lyapunov_estimate(initial: ClassicalState, field: DrivingField, consts: PhysicalConstants,
                      horizon: float, renorm_interval: float, delta0: float = 1e-9) -> float:
    return lyapunov_run(initial, field, consts, horizon, renorm_interval, delta0).estimate


# --------------------------------------------------------------------------
# CSV output

def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_trajectory_csv(path, trajectory: Iterable[ClassicalState], field: DrivingField,
                         consts: PhysicalConstants):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "x", "v", "p0", "pchi"])
        for s in trajectory:
            p0 = canonical_momentum(replace(s, gauge=Gauge.ZERO), field, consts)
            pchi = canonical_momentum(replace(s, gauge=Gauge.CHI), field, consts)
            writer.writerow([_fmt(s.t), _fmt(s.x), _fmt(s.v), _fmt(p0), _fmt(pchi)])


def write_events_csv(path, events: Iterable[ReflectionEvent]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_hit", "wall", "v_in", "v_out"])
        for e in events:
            writer.writerow([_fmt(e.t_hit), e.wall.value, _fmt(e.v_in), _fmt(e.v_out)])
