"""Pure-Python flight kernel for the driven box.

Mirrors ``_flight.pyx`` function for function; ``boxgauge.backend`` picks
whichever is importable. Field kinds are passed as integer codes
(``KIND_CONSTANT``, ``KIND_COSINE``) and the driving strength as
``k = alpha / m`` so that interior motion obeys ``x'' = -k f(t)``.
"""
from math import cos, sin

from .errors import NumericalFailure

KIND_CONSTANT = 0
KIND_COSINE = 1
WALL_LEFT = 0
WALL_RIGHT = 1

H_MIN = 1e-13
TIME_TOL = 1e-12
MAX_ROOT_ITER = 200
MAX_SCAN_ITER = 10_000_000


def flight(x, v, t, s, kind, f0, omega, k):
    """State after a free (wall-less) flight of duration ``s`` starting at time ``t``."""
    if kind == KIND_CONSTANT:
        acc = -k * f0
        return x + v * s + 0.5 * acc * s * s, v + acc * s
    a = omega * t
    b = omega * s
    hb = 0.5 * b
    sh = sin(hb)
    disp = -(k * f0 / (omega * omega)) * (cos(a) * 2.0 * sh * sh + sin(a) * (sin(b) - b))
    dv = -(k * f0 / omega) * 2.0 * cos(a + hb) * sh
    return x + v * s + disp, v + dv


def _root(x, v, t, lo, hi, wall, kind, f0, omega, k, box):
    # g > 0 inside the box, g <= 0 at/after the crossing
    sign = 1.0 if wall == WALL_LEFT else -1.0
    offset = 0.0 if wall == WALL_LEFT else box
    s = 0.5 * (lo + hi)
    for _ in range(MAX_ROOT_ITER):
        xs, vs = flight(x, v, t, s, kind, f0, omega, k)
        g = sign * (xs - offset)
        dg = sign * vs
        if g > 0.0:
            lo = s
        else:
            hi = s
        if hi - lo <= TIME_TOL:
            return hi
        step = g / dg if dg != 0.0 else 0.0
        s_new = s - step
        if dg == 0.0 or not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        elif abs(step) <= TIME_TOL:
            return s_new
        s = s_new
    raise NumericalFailure("wall-hit root finder did not converge",
                           bracket=(t + lo, t + hi), wall=wall)


def next_hit(x, v, t, t_max, kind, f0, omega, k, box):
    """Earliest wall contact in ``(t, t_max]``.

    Returns ``(found, t_hit, wall, v_in)``. The scan advances over windows on
    which a second-derivative bound certifies the particle stays inside,
    halving windows that cannot be certified.
    """
    span = t_max - t
    if span <= 0.0:
        return False, t, -1, v
    amax = abs(k * f0)
    delta = span if kind == KIND_CONSTANT else min(span, 0.5 / omega)
    sa, xa, va = 0.0, x, v
    sb = min(delta, span)
    for _ in range(MAX_SCAN_ITER):
        xb, vb = flight(x, v, t, sb, kind, f0, omega, k)
        w = sb - sa
        curv = 0.125 * amax * w * w
        taylor = 0.5 * amax * w * w
        safe_left = (min(xa, xb) - curv > 0.0) or (
            (xa > 0.0 or (xa == 0.0 and va > 0.0)) and xa + va * w - taylor > 0.0)
        gap_a = box - xa
        safe_right = (max(xa, xb) + curv < box) or (
            (gap_a > 0.0 or (gap_a == 0.0 and va < 0.0)) and gap_a - va * w - taylor > 0.0)
        if safe_left and safe_right:
            if sb >= span:
                return False, t_max, -1, v
            sa, xa, va = sb, xb, vb
            sb = min(sa + delta, span)
            continue
        outside_left = xb <= 0.0
        outside_right = xb >= box
        if w <= H_MIN:
            if outside_left or outside_right:
                wall = WALL_LEFT if outside_left else WALL_RIGHT
                s_hit = _root(x, v, t, sa, sb, wall, kind, f0, omega, k, box)
                _, v_in = flight(x, v, t, s_hit, kind, f0, omega, k)
                return True, t + s_hit, wall, v_in
            # uncertifiable touch without crossing
            if sb >= span:
                return False, t_max, -1, v
            sa, xa, va = sb, xb, vb
            sb = min(sa + delta, span)
            continue
        slope_bound = 0.5 * (va + vb)
        if outside_left and safe_right and xa > 0.0 and slope_bound + 0.5 * amax * w < 0.0:
            s_hit = _root(x, v, t, sa, sb, WALL_LEFT, kind, f0, omega, k, box)
            _, v_in = flight(x, v, t, s_hit, kind, f0, omega, k)
            return True, t + s_hit, WALL_LEFT, v_in
        if outside_right and safe_left and xa < box and slope_bound - 0.5 * amax * w > 0.0:
            s_hit = _root(x, v, t, sa, sb, WALL_RIGHT, kind, f0, omega, k, box)
            _, v_in = flight(x, v, t, s_hit, kind, f0, omega, k)
            return True, t + s_hit, WALL_RIGHT, v_in
        sb = sa + 0.5 * w
    raise NumericalFailure("wall scan exceeded iteration budget", t=t, t_max=t_max)


def advance(x, v, t, t_target, kind, f0, omega, k, box, events=None, max_events=10_000_000):
    """Evolve through all reflections up to ``t_target``.

    Appends ``(t_hit, wall, v_in, v_out)`` tuples to ``events`` when given.
    Returns ``(x, v, t_target, n_events)``.
    """
    n = 0
    while True:
        found, t_hit, wall, v_in = next_hit(x, v, t, t_target, kind, f0, omega, k, box)
        if not found:
            x, v = flight(x, v, t, t_target - t, kind, f0, omega, k)
            return x, v, t_target, n
        n += 1
        if n > max_events:
            raise NumericalFailure("too many reflections", t=t_hit, max_events=max_events)
        x = 0.0 if wall == WALL_LEFT else box
        v = -v_in
        t = t_hit
        if events is not None:
            events.append((t_hit, wall, v_in, -v_in))
