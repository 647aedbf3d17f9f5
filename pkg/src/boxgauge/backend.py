"""Selects the flight kernel: compiled extension if importable, else pure Python.

Set ``BOXGAUGE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _flight_py

if os.environ.get("BOXGAUGE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _flight_py
else:
    try:
        from . import _flight as _impl
    except ImportError:
        _impl = _flight_py

BACKEND = "cython" if _impl is not _flight_py else "python"

KIND_CONSTANT = _flight_py.KIND_CONSTANT
KIND_COSINE = _flight_py.KIND_COSINE
WALL_LEFT = _flight_py.WALL_LEFT
WALL_RIGHT = _flight_py.WALL_RIGHT

flight = _impl.flight
next_hit = _impl.next_hit
advance = _impl.advance
