"""Physical constants and the time-dependent driving field.

The driving enters the force as ``alpha * f(t)``. Two integrals of ``f`` are
needed throughout the package:

* the primitive ``F(t) = int_{t0}^{t} f(s) ds`` (vector-potential gauge), and
* ``xi(t) = -(alpha/m) int_{t0}^{t} int_{t0}^{t'} f(s) ds dt'``,
  a particular solution of ``x'' = -(alpha/m) f(t)``.

Both vanish at the field's reference time ``t0``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainRangeError

KINDS = ("constant", "cosine", "tabulated")


@dataclass(frozen=True)
class PhysicalConstants:
    """Units are natural (all ones) unless configured."""

    hbar: float = 1.0
    mass: float = 1.0
    box_length: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "box_length"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
        if not math.isfinite(self.alpha):
            raise ConfigurationError("alpha must be finite")

    def to_dict(self) -> dict:
        return {"hbar": self.hbar, "mass": self.mass,
                "box_length": self.box_length, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, data: dict) -> "PhysicalConstants":
        unknown = set(data) - {"hbar", "mass", "box_length", "alpha"}
        if unknown:
            raise ConfigurationError(f"unknown constants: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class DrivingField:
    """Modulation ``f(t)`` of a spatially homogeneous field.

    Use the ``constant``, ``cosine``, ``tabulated`` and ``zero`` constructors
    rather than the raw initializer.
    """

    kind: str
    f0: float = 0.0
    omega: float = 0.0
    samples: tuple = ()
    t0: float = 0.0
    _nodes: np.ndarray = field(default=None, init=False, repr=False, compare=False)
    _values: np.ndarray = field(default=None, init=False, repr=False, compare=False)
    _cum1: np.ndarray = field(default=None, init=False, repr=False, compare=False)
    _cum2: np.ndarray = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown field kind {self.kind!r}")
        if not math.isfinite(self.t0):
            raise ConfigurationError("t0 must be finite")
        if self.kind == "cosine" and not self.omega > 0:
            raise ConfigurationError("cosine driving needs omega > 0")
        if self.kind == "tabulated":
            self._prepare_table()

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, t0: float = 0.0) -> "DrivingField":
        return cls("constant", f0=0.0, t0=t0)

    @classmethod
    def constant(cls, f0: float, t0: float = 0.0) -> "DrivingField":
        return cls("constant", f0=float(f0), t0=float(t0))

    @classmethod
    def cosine(cls, f0: float, omega: float, t0: float = 0.0) -> "DrivingField":
        return cls("cosine", f0=float(f0), omega=float(omega), t0=float(t0))

    @classmethod
    def tabulated(cls, samples: Sequence[Sequence[float]], t0: float | None = None) -> "DrivingField":
        pairs = tuple((float(t), float(v)) for t, v in samples)
        if t0 is None:
            t0 = pairs[0][0] if pairs else 0.0
        return cls("tabulated", samples=pairs, t0=float(t0))

    def _prepare_table(self):
        if len(self.samples) < 2:
            raise ConfigurationError("tabulated field needs at least two samples")
        nodes = np.array([s[0] for s in self.samples], dtype=float)
        values = np.array([s[1] for s in self.samples], dtype=float)
        if np.any(np.diff(nodes) <= 0):
            raise ConfigurationError("tabulated sample times must be strictly increasing")
        if not nodes[0] <= self.t0 <= nodes[-1]:
            raise ConfigurationError("t0 must lie inside the tabulated range")
        h = np.diff(nodes)
        slope = np.diff(values) / h
        # Exact integrals of the piecewise-linear interpolant from nodes[0].
        seg1 = values[:-1] * h + slope * h**2 / 2
        cum1 = np.concatenate(([0.0], np.cumsum(seg1)))
        seg2 = cum1[:-1] * h + values[:-1] * h**2 / 2 + slope * h**3 / 6
        cum2 = np.concatenate(([0.0], np.cumsum(seg2)))
        object.__setattr__(self, "_nodes", nodes)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_cum1", cum1)
        object.__setattr__(self, "_cum2", cum2)

    @property
    def is_zero(self) -> bool:
        if self.kind == "tabulated":
            return bool(np.all(self._values == 0))
        return self.f0 == 0.0

    @property
    def time_range(self) -> tuple[float, float]:
        if self.kind == "tabulated":
            return float(self._nodes[0]), float(self._nodes[-1])
        return -math.inf, math.inf

    # tabulated helpers --------------------------------------------------
    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self._nodes[0], self._nodes[-1]
        if np.any((t < lo) | (t > hi)):
            raise DomainRangeError(f"time outside tabulated range [{lo}, {hi}]")
        idx = np.clip(np.searchsorted(self._nodes, t, side="right") - 1, 0, len(self._nodes) - 2)
        u = t - self._nodes[idx]
        slope = (self._values[idx + 1] - self._values[idx]) / (self._nodes[idx + 1] - self._nodes[idx])
        return idx, u, slope

    def _table_f(self, t):
        idx, u, slope = self._locate(t)
        return self._values[idx] + slope * u

    def _table_cum1(self, t):
        idx, u, slope = self._locate(t)
        return self._cum1[idx] + self._values[idx] * u + slope * u**2 / 2

    def _table_cum2(self, t):
        idx, u, slope = self._locate(t)
        return (self._cum2[idx] + self._cum1[idx] * u
                + self._values[idx] * u**2 / 2 + slope * u**3 / 6)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        out = {"kind": self.kind, "t0": self.t0}
        if self.kind in ("constant", "cosine"):
            out["f0"] = self.f0
        if self.kind == "cosine":
            out["omega"] = self.omega
        if self.kind == "tabulated":
            out["samples"] = [list(s) for s in self.samples]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "DrivingField":
        allowed = {"kind", "f0", "omega", "t0", "samples"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(f"unknown field keys: {sorted(unknown)}")
        kind = data.get("kind")
        if kind == "constant":
            return cls.constant(data.get("f0", 0.0), data.get("t0", 0.0))
        if kind == "cosine":
            if "omega" not in data:
                raise ConfigurationError("cosine field requires omega")
            return cls.cosine(data.get("f0", 0.0), data["omega"], data.get("t0", 0.0))
        if kind == "tabulated":
            return cls.tabulated(data.get("samples", []), data.get("t0"))
        raise ConfigurationError(f"unknown field kind {kind!r}")

    @classmethod
    def from_json(cls, text: str) -> "DrivingField":
        return cls.from_dict(json.loads(text))


def eval_f(field: DrivingField, t):
    """Dimensionless modulation f(t)."""
    ta = np.asarray(t, dtype=float)
    if field.kind == "constant":
        out = np.full_like(ta, field.f0)
    elif field.kind == "cosine":
        out = field.f0 * np.cos(field.omega * ta)
    else:
        out = field._table_f(ta)
    return _scalar(out, t)


def eval_F(field: DrivingField, t):
    """Primitive of f anchored so that F(t0) = 0."""
    ta = np.asarray(t, dtype=float)
    if field.kind == "constant":
        out = field.f0 * (ta - field.t0)
    elif field.kind == "cosine":
        w = field.omega
        out = field.f0 / w * (np.sin(w * ta) - math.sin(w * field.t0))
    else:
        out = field._table_cum1(ta) - field._table_cum1(field.t0)
    return _scalar(out, t)


def eval_xi(field: DrivingField, t, consts: PhysicalConstants):
    """xi(t) = -(alpha/m) * double integral of f from t0, so xi'' = -(alpha/m) f."""
    k = consts.alpha / consts.mass
    t0 = field.t0
    ta = np.asarray(t, dtype=float)
    if field.kind == "constant":
        out = -k * field.f0 * (ta - t0) ** 2 / 2
    elif field.kind == "cosine":
        w = field.omega
        # int_{t0}^{t} F = (f0/w) [ (cos w t0 - cos w t)/w - (t - t0) sin w t0 ]
        out = -k * field.f0 / w * ((np.cos(w * t0) - np.cos(w * ta)) / w - (ta - t0) * np.sin(w * t0))
    else:
        c1_0 = field._table_cum1(t0)
        out = -k * (field._table_cum2(ta) - field._table_cum2(t0) - c1_0 * (ta - t0))
    return _scalar(out, t)


def eval_xi_dot(field: DrivingField, t, consts: PhysicalConstants):
    """Time derivative of xi, i.e. -(alpha/m) F(t)."""
    return -consts.alpha / consts.mass * eval_F(field, t)


def _scalar(value, t):
    if np.ndim(t) == 0:
        return float(value)
    return np.asarray(value, dtype=float)
