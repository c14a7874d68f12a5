import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinprobe.units import (DEFAULT_CONSTANTS, BTPoint, EnergyPoint, from_energy_point,
                             mean_rel_speed, to_energy_point, zeeman_gap)

C = DEFAULT_CONSTANTS


def test_constants_relations():
    assert C.g_rb == 2 * C.g_cs
    assert C.reduced_mass < min(C.mass_rb, C.mass_cs)
    assert C.reduced_mass / 1.66053906660e-27 == pytest.approx(86.909 * 132.905 / (86.909 + 132.905), rel=1e-12)


def test_zeeman_gap_values():
    assert zeeman_gap(0.0) == 0.0
    gap = zeeman_gap(0.043)
    # mu_B * 0.25 * 4.3e-6 T
    assert gap == pytest.approx(9.2740100783e-24 * 0.25 * 4.3e-6, rel=1e-15)
    assert gap == pytest.approx(9.97e-30, rel=1e-3)
    assert gap / C.boltzmann == pytest.approx(0.722e-6, rel=1e-3)
    assert zeeman_gap(0.086) == 2 * gap
    with pytest.raises(ValueError):
        zeeman_gap(-1e-3)


def test_reference_energy_point():
    e = to_energy_point(BTPoint.from_lab(43, 435))
    assert e.e_ratio == pytest.approx(0.602, abs=1e-3)
    assert e.e_total == pytest.approx(1.157e-6, rel=1e-3)
    back = from_energy_point(EnergyPoint(e.e_total, e.e_ratio))
    assert back.b_field == pytest.approx(0.043, rel=1e-12)
    assert back.temperature == pytest.approx(435e-9, rel=1e-12)


def test_equal_energies_give_unit_ratio():
    b = 0.05
    t = zeeman_gap(b) / C.boltzmann
    assert to_energy_point(BTPoint(b, t)).e_ratio == pytest.approx(1.0, rel=1e-15)


def test_homogeneity():
    p = BTPoint(0.03, 300e-9)
    e1, e2 = to_energy_point(p), to_energy_point(BTPoint(0.06, 600e-9))
    assert e2.e_ratio == pytest.approx(e1.e_ratio, rel=1e-15)
    assert e2.e_total == pytest.approx(2 * e1.e_total, rel=1e-15)


def test_large_ratio_limit_sends_field_to_zero():
    fields = [from_energy_point(EnergyPoint(1e-6, r)).b_field for r in (1e2, 1e4, 1e6)]
    assert fields[0] > fields[1] > fields[2]
    assert fields[2] < 1e-7


def test_zero_field_ratio_rejected():
    with pytest.raises(ValueError):
        to_energy_point(BTPoint(0.0, 1e-7))
    with pytest.raises(ValueError):
        EnergyPoint(-1.0, 0.5)


@pytest.mark.parametrize("b_mG", np.geomspace(1, 100, 7))
@pytest.mark.parametrize("t_nK", np.geomspace(50, 1000, 7))
def test_round_trip_grid(b_mG, t_nK):
    p = BTPoint.from_lab(b_mG, t_nK)
    q = from_energy_point(to_energy_point(p))
    assert abs(q.b_field / p.b_field - 1) < 1e-12
    assert abs(q.temperature / p.temperature - 1) < 1e-12


@given(st.floats(0.1, 10.0))
def test_ratio_scale_invariance(c):
    p = BTPoint(0.043, 435e-9)
    r1 = to_energy_point(p).e_ratio
    r2 = to_energy_point(BTPoint(p.b_field * c, p.temperature * c)).e_ratio
    assert r2 == pytest.approx(r1, rel=1e-14)


def test_mean_rel_speed():
    v = mean_rel_speed(435e-9)
    assert v == pytest.approx(1.32e-2, rel=5e-3)
    assert mean_rel_speed(4 * 435e-9) == pytest.approx(2 * v, rel=1e-15)
    with pytest.raises(ValueError):
        mean_rel_speed(0.0)


def test_monotonicity():
    b = np.linspace(0, 0.1, 50)
    gaps = [zeeman_gap(x) for x in b]
    assert all(x < y for x, y in zip(gaps, gaps[1:]))
    t = np.linspace(1e-9, 1e-6, 50)
    speeds = [mean_rel_speed(x) for x in t]
    assert all(x < y for x, y in zip(speeds, speeds[1:]))
