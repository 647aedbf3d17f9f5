"""Compare the compiled and pure-Python flight kernels.

Runs the same event-driven advance (cosine driving, many wall hits) through
both implementations and reports wall time. The orbit is chaotic, so
last-bit differences between the two builds grow like exp(lambda t); the
agreement check therefore uses a short window.

    python3 benchmarks/bench_flight.py [--t-end 200] [--repeat 3]
"""
import argparse
import math
import time

from boxgauge import _flight_py
from boxgauge.backend import KIND_COSINE

try:
    from boxgauge import _flight
except ImportError:
    _flight = None


def _run(mod, t_end):
    events = []
    x, v, t, n = mod.advance(0.3, 1.0, 0.0, t_end, KIND_COSINE, 10.0, 4 * math.pi, 1.0, 1.0, events)
    return (x, v, n), events


def _best_time(mod, t_end, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = _run(mod, t_end)
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=200.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    t_py, (state_py, ev_py) = _best_time(_flight_py, args.t_end, args.repeat)
    print(f"python : {t_py:8.4f} s  ({state_py[2]} reflections)")
    if _flight is None:
        print("cython : extension not built")
        return
    t_cy, (state_cy, ev_cy) = _best_time(_flight, args.t_end, args.repeat)
    print(f"cython : {t_cy:8.4f} s  ({state_cy[2]} reflections)")
    print(f"speedup: {t_py / t_cy:8.1f} x")
    _, short_py = _run(_flight_py, 10.0)
    _, short_cy = _run(_flight, 10.0)
    dev = max(abs(a[0] - b[0]) for a, b in zip(short_py, short_cy))
    print(f"agreement over t <= 10: {len(short_py)} vs {len(short_cy)} hits, "
          f"max |t_hit difference| = {dev:.2e}")


if __name__ == "__main__":
    main()
