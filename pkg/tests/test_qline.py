import csv
import math

import numpy as np
import pytest

from boxgauge import qline
from boxgauge.errors import ConfigurationError, HorizonError
from boxgauge.model import DrivingField, PhysicalConstants, eval_F

C = PhysicalConstants()
GRID = qline.Grid(1024, -20.0, 20.0)


@pytest.fixture
def packet():
    return qline.gaussian_packet(0.0, 0.5, 1.0, GRID, C)


def _dist(a, b):
    return math.sqrt(np.sum(np.abs(a.samples - b.samples) ** 2) * a.grid.dx)


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        qline.Grid(1000, -1.0, 1.0)
    with pytest.raises(ConfigurationError):
        qline.Grid(64, 1.0, -1.0)
    assert GRID.dx == pytest.approx(40 / 1024)
    assert GRID.central_mask().sum() == 513


def test_gaussian_moments(packet):
    assert packet.norm_sq() == pytest.approx(1.0, abs=1e-10)
    assert packet.mean_x() == pytest.approx(0.0, abs=1e-8)
    assert packet.mean_p() == pytest.approx(0.5, abs=1e-8)
    assert packet.var_x() == pytest.approx(1.0, abs=1e-8)
    assert packet.edge_mass() < 1e-8


def test_gaussian_margin_enforced():
    with pytest.raises(ConfigurationError):
        qline.gaussian_packet(17.0, 0.0, 1.0, GRID, C)
    with pytest.raises(ConfigurationError):
        qline.gaussian_packet(0.0, 0.0, -1.0, GRID, C)


def test_analytic_chi_identity_and_norm(packet):
    fld = DrivingField.constant(1.3)
    same = qline.analytic_propagate_chi(packet, 0.0, 0.0, fld, C)
    assert _dist(same, packet) < 1e-14
    out = qline.analytic_propagate_chi(packet, 0.0, 1.5, fld, C)
    assert out.norm_sq() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        qline.analytic_propagate_chi(packet, 0.0, 1.0, DrivingField.cosine(1.0, 1.0), C)


@pytest.mark.parametrize("tau", [0.5, 2.0])
def test_free_spreading(tau):
    c = PhysicalConstants(hbar=0.8, mass=1.7)
    sigma = 0.9
    pk = qline.gaussian_packet(0.0, 0.0, sigma, GRID, c)
    out = qline.analytic_propagate_chi(pk, 0.0, tau, DrivingField.zero(), c)
    expected = sigma**2 + (c.hbar * tau / (2 * c.mass * sigma)) ** 2
    assert out.var_x() == pytest.approx(expected, abs=1e-9)


def test_gauge_phase_shifts_momentum_only(packet):
    fld = DrivingField.cosine(2.0, 3.0)
    t = 0.4
    out = qline.gauge_phase_line(packet, t, fld, C)
    assert out.mean_p() - packet.mean_p() == pytest.approx(-C.alpha * eval_F(fld, t), abs=1e-8)
    assert out.mean_x() == pytest.approx(packet.mean_x(), abs=1e-14)
    assert out.norm_sq() == pytest.approx(packet.norm_sq(), abs=1e-14)
    back = qline.gauge_phase_line(out, t, fld, C, inverse=True)
    assert _dist(back, packet) < 1e-14
    assert _dist(qline.gauge_phase_line(packet, 0.0, fld, C), packet) < 1e-14


def test_split_step_free_single_step_is_exact(packet):
    a = qline.split_step_H0(packet, 0.0, 0.7, 1, DrivingField.zero(), C)
    b = qline.analytic_propagate_chi(packet, 0.0, 0.7, DrivingField.zero(), C)
    assert _dist(a, b) < 1e-10


def test_split_step_norm_and_second_order(packet):
    fld = DrivingField.cosine(2.0, 2 * math.pi)
    ref = qline.split_step_H0(packet, 0.0, 1.0, 1024, fld, C)
    assert abs(ref.norm_sq() - 1) < 1e-12
    e1 = _dist(qline.split_step_H0(packet, 0.0, 1.0, 64, fld, C), ref)
    e2 = _dist(qline.split_step_H0(packet, 0.0, 1.0, 128, fld, C), ref)
    assert 3.5 < e1 / e2 < 4.5
    with pytest.raises(ConfigurationError):
        qline.split_step_H0(packet, 0.0, 1.0, 0, fld, C)


def test_bch_check_zero_and_ladder(packet):
    assert qline.bch_check(packet, 1.0, DrivingField.zero(), C, 1) <= 1e-10
    fld = DrivingField.constant(1.0)
    r = [qline.bch_check(packet, 1.0, fld, C, s) for s in (256, 512, 1024)]
    assert 3.8 < r[0] / r[1] < 4.2 and 3.8 < r[1] / r[2] < 4.2
    # frozen reference at 1024 steps
    assert r[2] == pytest.approx(3.97e-8, rel=0.02)


def test_general_field_gauge_residual(packet):
    fld = DrivingField.cosine(2.0, 2 * math.pi)
    r1 = qline.gauge_residual_line(packet, 0.0, 1.0, 256, fld, C)
    r2 = qline.gauge_residual_line(packet, 0.0, 1.0, 512, fld, C)
    assert 3.8 < r1 / r2 < 4.2
    # consistent with the constant-field closed form
    const = DrivingField.constant(0.7)
    a = qline.analytic_propagate_chi(packet, 0.0, 1.3, const, C)
    b = qline.propagate_chi_line(packet, 0.0, 1.3, const, C)
    assert _dist(a, b) < 1e-12


def test_ehrenfest_constant_and_free(packet):
    rows = qline.ehrenfest_check(packet, [0.0, 0.5, 1.0, 2.0], DrivingField.constant(1.0), C)
    assert max(r.deviation for r in rows) <= 1e-6
    free = qline.ehrenfest_check(packet, [1.0, 2.0], DrivingField.zero(), C)
    assert max(r.deviation for r in free) <= 1e-8
    assert free[-1].mean_x == pytest.approx(1.0, abs=1e-8)


def test_ehrenfest_cosine(packet):
    rows = qline.ehrenfest_check(packet, np.linspace(0, 2, 5), DrivingField.cosine(2.0, 2 * math.pi), C,
                                 dt=1e-3)
    assert max(r.deviation for r in rows) <= 1e-5


def test_ehrenfest_horizon_error(packet):
    with pytest.raises(HorizonError) as info:
        qline.ehrenfest_check(packet, [20.0], DrivingField.zero(), C, dt=1e-2)
    assert info.value.diagnostic["edge_mass"] > 1e-6


def test_csv_exports(packet, tmp_path):
    p = tmp_path / "pk.csv"
    qline.write_packet_csv(p, packet)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["x", "re", "im", "abs2"] and len(rows) == 1025
    rows_m = qline.ehrenfest_check(packet, [0.0, 0.5], DrivingField.zero(), C)
    q = tmp_path / "m.csv"
    qline.write_moments_csv(q, rows_m)
    m = list(csv.reader(open(q)))
    assert m[0] == ["t", "mean_x", "mean_p", "var_x"] and len(m) == 3
