import math

import numpy as np
import pytest
import scipy.integrate

from boxgauge.errors import ConfigurationError, DomainRangeError
from boxgauge.model import DrivingField, PhysicalConstants, eval_F, eval_f, eval_xi, eval_xi_dot

C = PhysicalConstants()
FIELDS = [
    DrivingField.constant(2.5, t0=0.4),
    DrivingField.cosine(3.0, 2 * math.pi, t0=0.3),
    DrivingField.tabulated([(0.0, 1.0), (0.5, -2.0), (1.0, 0.5), (2.0, 3.0)], t0=0.25),
]


def _quad(fn, a, b):
    return scipy.integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-12, points=[0.5, 1.0] if a < 1 else None)[0]


def test_constants_validation():
    with pytest.raises(ConfigurationError):
        PhysicalConstants(hbar=0.0)
    with pytest.raises(ConfigurationError):
        PhysicalConstants(mass=-1.0)
    with pytest.raises(ConfigurationError):
        PhysicalConstants(alpha=math.inf)


def test_constants_roundtrip_and_strict_keys():
    c = PhysicalConstants(hbar=2.0, mass=0.5, box_length=3.0, alpha=-1.0)
    assert PhysicalConstants.from_dict(c.to_dict()) == c
    with pytest.raises(ConfigurationError):
        PhysicalConstants.from_dict({"hbar": 1.0, "planck": 1.0})


@pytest.mark.parametrize("fld", FIELDS, ids=["constant", "cosine", "tabulated"])
def test_F_is_anchored_primitive_of_f(fld):
    assert eval_F(fld, fld.t0) == pytest.approx(0.0, abs=1e-15)
    for t in (0.1, 0.77, 1.6):
        oracle = _quad(lambda s: eval_f(fld, s), fld.t0, t)
        assert eval_F(fld, t) == pytest.approx(oracle, abs=1e-11)


@pytest.mark.parametrize("fld", FIELDS, ids=["constant", "cosine", "tabulated"])
def test_xi_is_double_integral(fld):
    k = C.alpha / C.mass
    for t in (0.1, 0.9, 1.7):
        oracle = -k * _quad(lambda s: eval_F(fld, s), fld.t0, t)
        assert eval_xi(fld, t, C) == pytest.approx(oracle, abs=1e-11)
        assert eval_xi_dot(fld, t, C) == pytest.approx(-k * eval_F(fld, t), abs=1e-15)


def test_vectorized_and_scalar_forms_agree():
    fld = FIELDS[1]
    t = np.linspace(0.0, 2.0, 7)
    vec = eval_F(fld, t)
    assert isinstance(eval_F(fld, 0.5), float)
    assert np.allclose(vec, [eval_F(fld, float(s)) for s in t], atol=0, rtol=0)


def test_tabulated_interpolates_linearly_and_rejects_out_of_range():
    fld = FIELDS[2]
    assert eval_f(fld, 0.25) == pytest.approx(-0.5)
    assert eval_f(fld, 1.5) == pytest.approx(1.75)
    with pytest.raises(DomainRangeError):
        eval_f(fld, 2.5)
    with pytest.raises(DomainRangeError):
        eval_F(fld, -0.1)


def test_field_validation():
    with pytest.raises(ConfigurationError):
        DrivingField.cosine(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        DrivingField.tabulated([(0.0, 1.0)])
    with pytest.raises(ConfigurationError):
        DrivingField.tabulated([(0.0, 1.0), (0.0, 2.0)])
    with pytest.raises(ConfigurationError):
        DrivingField("square")


@pytest.mark.parametrize("fld", FIELDS, ids=["constant", "cosine", "tabulated"])
def test_field_json_roundtrip(fld):
    back = DrivingField.from_json(fld.to_json())
    assert back == fld
    t = np.linspace(0.0, 2.0, 5)
    assert np.array_equal(eval_F(back, t), eval_F(fld, t))


def test_field_rejects_unknown_keys():
    with pytest.raises(ConfigurationError):
        DrivingField.from_dict({"kind": "constant", "f0": 1.0, "phase": 0.0})
    with pytest.raises(ConfigurationError):
        DrivingField.from_dict({"kind": "cosine", "f0": 1.0})


def test_zero_field():
    z = DrivingField.zero()
    assert z.is_zero
    assert eval_F(z, 3.0) == 0.0 and eval_xi(z, 3.0, C) == 0.0
