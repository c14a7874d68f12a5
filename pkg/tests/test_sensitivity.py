import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinprobe.dynamics import build_generator
from spinprobe.rates import CloudGeometry, ProbeModel
from spinprobe.sensitivity import (Axis, DomainError, SensitivityResult, bures_distance,
                                   displaced, fisher_central, fisher_direct, hellinger_distance,
                                   point_on_axis, sensitivity, sensitivity_profile, speed_between,
                                   statistical_speed, theta_of)
from spinprobe.units import BTPoint, to_energy_point, zeeman_energy_k

dists = st.lists(st.floats(0.0, 1.0), min_size=7, max_size=7).filter(lambda v: sum(v) > 1e-3).map(
    lambda v: np.asarray(v) / sum(v))


def bernoulli(theta):
    return np.array([theta, 1 - theta])


def test_bures_basic_values():
    p = np.array([0.2, 0.3, 0.5])
    assert bures_distance(p, p) == 0.0
    assert bures_distance([1, 0], [0, 1]) == pytest.approx(math.sqrt(2), rel=1e-15)
    d2 = bures_distance([0.5, 0.5], [0.9, 0.1]) ** 2
    assert d2 == pytest.approx(2 - 2 * (math.sqrt(0.45) + math.sqrt(0.05)), rel=1e-12)
    assert d2 == pytest.approx(0.211146, abs=1e-6)
    assert hellinger_distance([1, 0], [0, 1]) == pytest.approx(1.0)


def test_bures_rejects_unnormalized():
    with pytest.raises(ValueError):
        bures_distance([0.5, 0.6], [0.5, 0.5])


@given(dists, dists, dists)
def test_bures_metric_properties(p, q, r):
    assert bures_distance(p, q) == bures_distance(q, p)
    assert 0 <= bures_distance(p, q) <= math.sqrt(2) + 1e-12
    assert bures_distance(p, r) <= bures_distance(p, q) + bures_distance(q, r) + 1e-12


def test_bernoulli_speed_and_fisher():
    theta, delta = 0.5, 1e-3
    exact_f = 1 / (theta * (1 - theta))
    assert exact_f == 4
    for q in (bernoulli(theta + delta), bernoulli(theta - delta)):
        s = speed_between(bernoulli(theta), q, delta)
        assert s == pytest.approx(math.sqrt(exact_f / 8), rel=1e-2)
        assert 8 * s ** 2 == pytest.approx(exact_f, rel=1e-2)
    assert fisher_direct(bernoulli(theta), [1.0, -1.0]) == pytest.approx(4.0)


def test_fisher_direct_edge_cases():
    assert fisher_direct(np.full(7, 1 / 7), np.zeros(7)) == 0.0
    with pytest.raises(ZeroDivisionError):
        fisher_direct([1.0, 0.0], [-0.1, 0.1])
    with pytest.raises(ValueError):
        fisher_direct([0.5, 0.5], [0.1, 0.1])


def test_result_fisher_identity():
    r = SensitivityResult(Axis.CONST_B_VARY_T, 1.0, 1e-3, 0.1, 0.2, 0.3, 0.4)
    assert r.fisher_left == 8 * 0.3 ** 2 and r.fisher_right == 8 * 0.4 ** 2


def test_displacement_geometry(model, ref):
    e_th = ref.temperature
    e_z = zeeman_energy_k(ref.b_field)
    e0 = e_th + e_z
    p = displaced(ref, Axis.CONST_B_VARY_T, 0.01, model)
    assert p.b_field == ref.b_field and p.temperature == pytest.approx(e_th + 0.01 * e0)
    p = displaced(ref, Axis.CONST_T_VARY_B, -0.01, model)
    assert p.temperature == ref.temperature
    assert zeeman_energy_k(p.b_field) == pytest.approx(e_z - 0.01 * e0, rel=1e-12)
    p = displaced(ref, Axis.CONST_ETOT_VARY_RATIO, 0.01, model)
    assert to_energy_point(p).e_total == pytest.approx(e0, rel=1e-12)
    assert to_energy_point(p).e_ratio > to_energy_point(ref).e_ratio
    p = displaced(ref, Axis.CONST_RATIO_VARY_ETOT, 0.01, model)
    assert to_energy_point(p).e_ratio == pytest.approx(to_energy_point(ref).e_ratio, rel=1e-12)
    assert math.hypot(p.temperature - e_th, zeeman_energy_k(p.b_field) - e_z) == pytest.approx(0.01 * e0)


def test_relative_displacement(model, ref):
    p = displaced(ref, Axis.CONST_T_VARY_B, 0.01, model, "relative")
    assert p.b_field == pytest.approx(ref.b_field * 1.01)
    p = displaced(ref, Axis.CONST_ETOT_VARY_RATIO, -0.01, model, "relative")
    assert to_energy_point(p).e_ratio == pytest.approx(to_energy_point(ref).e_ratio * 0.99)


def test_domain_violations(model):
    low = BTPoint.from_lab(43, 5)
    with pytest.raises(DomainError):
        displaced(low, Axis.CONST_B_VARY_T, -0.1, model)
    with pytest.raises(DomainError):
        displaced(BTPoint(0.0, 1e-7), Axis.CONST_B_VARY_T, 0.01, model)
    with pytest.raises(ValueError):
        statistical_speed(model, BTPoint.from_lab(43, 435), Axis.CONST_B_VARY_T, "left", 0.0)
    with pytest.raises(ValueError):
        sensitivity(model, BTPoint.from_lab(43, 435), Axis.CONST_B_VARY_T, 0.2)


def test_statistical_speed_sides_agree_with_result(model, ref):
    res = sensitivity(model, ref, Axis.CONST_ETOT_VARY_RATIO)
    left = statistical_speed(model, ref, Axis.CONST_ETOT_VARY_RATIO, "left")
    right = statistical_speed(model, ref, Axis.CONST_ETOT_VARY_RATIO, "right")
    assert left.speed == pytest.approx(res.speed_left, rel=1e-12)
    assert right.speed == pytest.approx(res.speed_right, rel=1e-12)
    assert left.fisher == pytest.approx(res.fisher_left, rel=1e-12)
    assert res.theta_ref == pytest.approx(to_energy_point(ref).e_ratio)


def test_ratio_axis_more_sensitive_than_total_energy(model, ref):
    ratio = sensitivity(model, ref, Axis.CONST_ETOT_VARY_RATIO)
    total = sensitivity(model, ref, Axis.CONST_RATIO_VARY_ETOT)
    assert min(ratio.speed_left, ratio.speed_right) > max(total.speed_left, total.speed_right)


@pytest.mark.parametrize("axis", [Axis.CONST_T_VARY_B, Axis.CONST_B_VARY_T, Axis.CONST_ETOT_VARY_RATIO])
def test_bures_slope_matches_direct_fisher(model, ref, axis):
    res = sensitivity(model, ref, axis, 1e-3)
    direct = fisher_central(model, ref, axis)
    assert res.fisher_left == pytest.approx(direct, rel=1e-2)
    assert res.fisher_right == pytest.approx(direct, rel=1e-2)


@pytest.mark.parametrize("axis", list(Axis))
def test_stable_under_halving_delta(model, ref, axis):
    a = sensitivity(model, ref, axis, 1e-3)
    b = sensitivity(model, ref, axis, 5e-4)
    if axis is Axis.CONST_RATIO_VARY_ETOT:
        # identically zero for energy-independent cross sections; only round-off remains
        assert max(a.sqrt_f_left, b.sqrt_f_left) < 1e-9
        return
    assert b.speed_left == pytest.approx(a.speed_left, rel=5e-3)
    assert b.speed_right == pytest.approx(a.speed_right, rel=5e-3)


def test_rate_scaling_invariance(model, ref):
    big = ProbeModel(model.table, CloudGeometry(overlap_constant=1e21), model.constants)
    for axis in (Axis.CONST_T_VARY_B, Axis.CONST_B_VARY_T, Axis.CONST_ETOT_VARY_RATIO):
        a, b = sensitivity(model, ref, axis), sensitivity(big, ref, axis)
        assert b.sqrt_f_left == pytest.approx(a.sqrt_f_left, rel=1e-9)
        assert b.sqrt_f_right == pytest.approx(a.sqrt_f_right, rel=1e-9)


def test_point_on_axis_round_trip(model):
    for axis, fixed, theta in [(Axis.CONST_T_VARY_B, 435e-9, 0.043),
                               (Axis.CONST_B_VARY_T, 0.043, 435e-9),
                               (Axis.CONST_RATIO_VARY_ETOT, 0.6, 1.6e-6),
                               (Axis.CONST_ETOT_VARY_RATIO, 1.6e-6, 0.6)]:
        p = point_on_axis(axis, fixed, theta, model)
        assert theta_of(p, axis, model) == pytest.approx(theta, rel=1e-12)


def test_temperature_profile_vanishes_at_both_ends(model):
    t = np.geomspace(5e-9, 1e-4, 120)
    prof = sensitivity_profile(model, Axis.CONST_B_VARY_T, 0.043, t)
    for curve in (prof.sqrt_f_left, prof.sqrt_f_right):
        peak = curve.max()
        assert curve[0] < 0.05 * peak and curve[-1] < 0.05 * peak


def test_total_energy_profile_interior_maximum(model):
    r = np.linspace(0.1, 2.0, 200)
    prof = sensitivity_profile(model, Axis.CONST_ETOT_VARY_RATIO, 1.6e-6, r)
    i = int(np.argmax(prof.sqrt_f_left))
    assert 0 < i < r.size - 1


def test_constant_ratio_profile_is_small(model):
    etot = np.linspace(0.5e-6, 2.5e-6, 30)
    flat = sensitivity_profile(model, Axis.CONST_RATIO_VARY_ETOT, 0.6, etot)
    steep = sensitivity_profile(model, Axis.CONST_ETOT_VARY_RATIO, 1.6e-6, np.linspace(0.1, 2, 30))
    assert flat.sqrt_f_left.max() < 1e-6 * steep.sqrt_f_left.max()


def test_profile_threads_do_not_change_results(model):
    r = np.linspace(0.2, 1.5, 40)
    a = sensitivity_profile(model, Axis.CONST_ETOT_VARY_RATIO, 1.6e-6, r, threads=1)
    b = sensitivity_profile(model, Axis.CONST_ETOT_VARY_RATIO, 1.6e-6, r, threads=4)
    np.testing.assert_array_equal(a.sqrt_f_left, b.sqrt_f_left)
    np.testing.assert_array_equal(a.sqrt_f_right, b.sqrt_f_right)


def test_finite_time_sensitivity(model, ref):
    zero = sensitivity(model, ref, Axis.CONST_B_VARY_T, at_time=0.0)
    assert zero.speed_left == zero.speed_right == 0.0
    late = sensitivity(model, ref, Axis.CONST_B_VARY_T, at_time=200.0)
    steady = sensitivity(model, ref, Axis.CONST_B_VARY_T)
    assert late.speed_left == pytest.approx(steady.speed_left, rel=1e-4)


def _spectral_gap(model, axis, fixed, grid):
    gaps = []
    for t in grid:
        m = build_generator(model.rates(point_on_axis(axis, fixed, t, model))).matrix
        gaps.append(np.sort(np.abs(np.linalg.eigvals(m)))[1])
    return min(gaps)


def test_finite_time_maxima_track_steady_state(model):
    # once the slowest mode has decayed by ~e^-8 the maximum sits where the steady-state one does
    r = np.linspace(0.1, 2.0, 60)
    axis = Axis.CONST_ETOT_VARY_RATIO
    t = 8.0 / _spectral_gap(model, axis, 1.6e-6, r)
    steady = sensitivity_profile(model, axis, 1.6e-6, r)
    late = sensitivity_profile(model, axis, 1.6e-6, r, at_time=t)
    for a, b in ((steady.sqrt_f_left, late.sqrt_f_left), (steady.sqrt_f_right, late.sqrt_f_right)):
        assert abs(int(np.argmax(a)) - int(np.argmax(b))) <= 2
