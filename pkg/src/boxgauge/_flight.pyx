# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled flight kernel for the driven box.

Same functions and semantics as ``_flight_py``; see that module for the
algorithm notes.
"""
from libc.math cimport cos, sin, fabs

from .errors import NumericalFailure

KIND_CONSTANT = 0
KIND_COSINE = 1
WALL_LEFT = 0
WALL_RIGHT = 1

cdef double H_MIN = 1e-13
cdef double TIME_TOL = 1e-12
cdef int MAX_ROOT_ITER = 200
cdef long MAX_SCAN_ITER = 10000000


cdef inline void _flight(double x, double v, double t, double s, int kind,
                         double f0, double omega, double k,
                         double* xo, double* vo) nogil:
    cdef double acc, a, b, hb, sh
    if kind == 0:
        acc = -k * f0
        xo[0] = x + v * s + 0.5 * acc * s * s
        vo[0] = v + acc * s
        return
    a = omega * t
    b = omega * s
    hb = 0.5 * b
    sh = sin(hb)
    xo[0] = x + v * s - (k * f0 / (omega * omega)) * (cos(a) * 2.0 * sh * sh + sin(a) * (sin(b) - b))
    vo[0] = v - (k * f0 / omega) * 2.0 * cos(a + hb) * sh


def flight(double x, double v, double t, double s, int kind, double f0, double omega, double k):
    """State after a free (wall-less) flight of duration ``s`` starting at time ``t``."""
    cdef double xo, vo
    _flight(x, v, t, s, kind, f0, omega, k, &xo, &vo)
    return xo, vo


cdef double _root(double x, double v, double t, double lo, double hi, int wall, int kind,
                  double f0, double omega, double k, double box) except? -1.0:
    cdef double sign = 1.0 if wall == 0 else -1.0
    cdef double offset = 0.0 if wall == 0 else box
    cdef double s = 0.5 * (lo + hi)
    cdef double xs, vs, g, dg, step, s_new
    cdef int it
    for it in range(MAX_ROOT_ITER):
        _flight(x, v, t, s, kind, f0, omega, k, &xs, &vs)
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
        elif fabs(step) <= TIME_TOL:
            return s_new
        s = s_new
    raise NumericalFailure("wall-hit root finder did not converge",
                           bracket=(t + lo, t + hi), wall=wall)


cdef int _next_hit(double x, double v, double t, double t_max, int kind, double f0,
                   double omega, double k, double box,
                   double* t_hit, int* wall_out, double* v_in) except -2:
    # returns 1 when a hit was found, 0 otherwise
    cdef double span = t_max - t
    cdef double amax, delta, sa, xa, va, sb, xb, vb, w, curv, taylor, gap_a, slope_bound, s_hit, dummy
    cdef bint safe_left, safe_right, outside_left, outside_right
    cdef int wall
    cdef long it
    if span <= 0.0:
        return 0
    amax = fabs(k * f0)
    if kind == 0:
        delta = span
    else:
        delta = min(span, 0.5 / omega)
    sa = 0.0
    xa = x
    va = v
    sb = min(delta, span)
    for it in range(MAX_SCAN_ITER):
        _flight(x, v, t, sb, kind, f0, omega, k, &xb, &vb)
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
                return 0
            sa = sb
            xa = xb
            va = vb
            sb = min(sa + delta, span)
            continue
        outside_left = xb <= 0.0
        outside_right = xb >= box
        if w <= H_MIN:
            if outside_left or outside_right:
                wall = 0 if outside_left else 1
                s_hit = _root(x, v, t, sa, sb, wall, kind, f0, omega, k, box)
                _flight(x, v, t, s_hit, kind, f0, omega, k, &dummy, v_in)
                t_hit[0] = t + s_hit
                wall_out[0] = wall
                return 1
            if sb >= span:
                return 0
            sa = sb
            xa = xb
            va = vb
            sb = min(sa + delta, span)
            continue
        slope_bound = 0.5 * (va + vb)
        if outside_left and safe_right and xa > 0.0 and slope_bound + 0.5 * amax * w < 0.0:
            s_hit = _root(x, v, t, sa, sb, 0, kind, f0, omega, k, box)
            _flight(x, v, t, s_hit, kind, f0, omega, k, &dummy, v_in)
            t_hit[0] = t + s_hit
            wall_out[0] = 0
            return 1
        if outside_right and safe_left and xa < box and slope_bound - 0.5 * amax * w > 0.0:
            s_hit = _root(x, v, t, sa, sb, 1, kind, f0, omega, k, box)
            _flight(x, v, t, s_hit, kind, f0, omega, k, &dummy, v_in)
            t_hit[0] = t + s_hit
            wall_out[0] = 1
            return 1
        sb = sa + 0.5 * w
    raise NumericalFailure("wall scan exceeded iteration budget", t=t, t_max=t_max)


def next_hit(double x, double v, double t, double t_max, int kind, double f0,
             double omega, double k, double box):
    """Earliest wall contact in ``(t, t_max]`` as ``(found, t_hit, wall, v_in)``."""
    cdef double t_hit = t, v_in = v
    cdef int wall = -1
    cdef int found = _next_hit(x, v, t, t_max, kind, f0, omega, k, box, &t_hit, &wall, &v_in)
    if not found:
        return False, t_max, -1, v
    return True, t_hit, wall, v_in


def advance(double x, double v, double t, double t_target, int kind, double f0,
            double omega, double k, double box, events=None, long max_events=10000000):
    """Evolve through all reflections up to ``t_target``; see ``_flight_py.advance``."""
    cdef long n = 0
    cdef double t_hit = 0.0, v_in = 0.0, xo, vo
    cdef int wall = -1
    cdef bint record = events is not None
    while True:
        if not _next_hit(x, v, t, t_target, kind, f0, omega, k, box, &t_hit, &wall, &v_in):
            _flight(x, v, t, t_target - t, kind, f0, omega, k, &xo, &vo)
            return xo, vo, t_target, n
        n += 1
        if n > max_events:
            raise NumericalFailure("too many reflections", t=t_hit, max_events=max_events)
        x = 0.0 if wall == 0 else box
        v = -v_in
        t = t_hit
        if record:
            events.append((t_hit, wall, v_in, -v_in))
