"""Bures/Hellinger distances, statistical speeds and Fisher information.

A sensing axis fixes one coordinate of the bath and varies its partner:

    const_T_vary_B          magnetometry (theta = B)
    const_B_vary_T          thermometry (theta = T)
    const_ratio_vary_Etot   calorimetry (theta = E_tot)
    const_Etot_vary_ratio   energy-balance sensing (theta = E_th / E_Z)

Step normalization
------------------
With ``normalization="energy"`` (default) a step of size delta moves the
bath point by a Euclidean distance ``delta * E_tot(ref)`` in the plane of
thermal and Zeeman energies, along the axis direction (E_th axis, E_Z axis,
the ray of constant ratio, or the anti-diagonal of constant total energy).
Speeds are then dimensionless and comparable between axes.

With ``normalization="relative"`` the named parameter is scaled by
``1 +/- delta``.  Because the steady state depends on (B, T) only through
the energy ratio for energy-independent cross sections, this choice makes
the B, T and E_ratio axes indistinguishable.

The statistical speed is the slope of the Hellinger distance
``d_H^2 = 1 - sum sqrt(P Q)`` (half the squared Bures distance), for which
``F = 8 s^2`` is the classical Fisher information.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import SpinDistribution, build_generator, evolve, evolve_many, steady_state
from .rates import ProbeModel
from .units import BTPoint, EnergyPoint, field_for_zeeman_energy, from_energy_point, \
    to_energy_point, zeeman_energy_k

FLOOR = 1e-15
NORMALIZATIONS = ("energy", "relative")


class Axis(str, Enum):
    CONST_T_VARY_B = "const_T_vary_B"
    CONST_B_VARY_T = "const_B_vary_T"
    CONST_RATIO_VARY_ETOT = "const_ratio_vary_Etot"
    CONST_ETOT_VARY_RATIO = "const_Etot_vary_ratio"


class DomainError(ValueError):
    """A step along an axis left the physical domain."""


def _as_probs(p):
    arr = p.probabilities if isinstance(p, SpinDistribution) else np.asarray(p, dtype=float)
    if abs(arr.sum() - 1.0) > 1e-6:
        raise ValueError(f"distribution not normalized (sum={arr.sum()!r})")
    return np.where(arr < FLOOR, 0.0, arr)


def bures_distance(p, q) -> float:
    """d with d^2 = 2 - 2 sum_m sqrt(P_m Q_m), for population-only states."""
    a, b = _as_probs(p), _as_probs(q)
    if a.shape != b.shape:
        raise ValueError("distributions have different lengths")
    # sum (sqrt P - sqrt Q)^2 equals 2 - 2 sum sqrt(PQ) for normalized inputs
    # and does not cancel catastrophically for nearby states
    return math.sqrt(float(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)))


def hellinger_distance(p, q) -> float:
    return bures_distance(p, q) / math.sqrt(2.0)


def speed_between(p, q, delta: float) -> float:
    """One-sided statistical speed for a parameter step of size delta."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    return hellinger_distance(p, q) / delta


def fisher_direct(p, dp) -> float:
    """Classical Fisher information sum_m (dP_m)^2 / P_m."""
    p = np.asarray(p.probabilities if isinstance(p, SpinDistribution) else p, dtype=float)
    dp = np.asarray(dp, dtype=float)
    if abs(dp.sum()) > 1e-8 * max(1.0, np.abs(dp).max()):
        raise ValueError("population derivative must sum to zero")
    live = dp != 0
    if np.any(p[live] <= 0):
        raise ZeroDivisionError("population vanishes where its derivative does not")
    return float(np.sum(dp[live] ** 2 / p[live]))


def theta_of(point: BTPoint, axis: Axis, model: ProbeModel) -> float:
    axis = Axis(axis)
    if axis is Axis.CONST_T_VARY_B:
        return point.b_field
    if axis is Axis.CONST_B_VARY_T:
        return point.temperature
    e = to_energy_point(point, model.constants)
    return e.e_total if axis is Axis.CONST_RATIO_VARY_ETOT else e.e_ratio


def point_on_axis(axis: Axis, fixed: float, theta: float, model: ProbeModel) -> BTPoint:
    """Bath point with the fixed coordinate `fixed` and the scanned one `theta`.

    Units: B in gauss, T and E_tot in kelvin, ratio dimensionless.
    """
    axis = Axis(axis)
    if axis is Axis.CONST_T_VARY_B:
        return BTPoint(theta, fixed)
    if axis is Axis.CONST_B_VARY_T:
        return BTPoint(fixed, theta)
    if axis is Axis.CONST_RATIO_VARY_ETOT:
        return from_energy_point(EnergyPoint(theta, fixed), model.constants)
    return from_energy_point(EnergyPoint(fixed, theta), model.constants)


def displaced(ref: BTPoint, axis: Axis, step: float, model: ProbeModel,
              normalization: str = "energy") -> BTPoint:
    """Move `ref` along `axis` by the signed dimensionless `step`."""
    axis = Axis(axis)
    c = model.constants
    if ref.b_field <= 0:
        raise DomainError("sensitivity needs a strictly positive field")
    try:
        if normalization == "relative":
            if axis is Axis.CONST_T_VARY_B:
                return BTPoint(ref.b_field * (1 + step), ref.temperature)
            if axis is Axis.CONST_B_VARY_T:
                return BTPoint(ref.b_field, ref.temperature * (1 + step))
            e = to_energy_point(ref, c)
            if axis is Axis.CONST_RATIO_VARY_ETOT:
                return from_energy_point(EnergyPoint(e.e_total * (1 + step), e.e_ratio), c)
            return from_energy_point(EnergyPoint(e.e_total, e.e_ratio * (1 + step)), c)
        if normalization != "energy":
            raise ValueError(f"unknown normalization {normalization!r}")
        e_th = ref.temperature
        e_z = zeeman_energy_k(ref.b_field, c)
        length = step * (e_th + e_z)
        if axis is Axis.CONST_T_VARY_B:
            e_z += length
        elif axis is Axis.CONST_B_VARY_T:
            e_th += length
        elif axis is Axis.CONST_RATIO_VARY_ETOT:
            stretch = 1 + length / math.hypot(e_th, e_z)
            e_th, e_z = e_th * stretch, e_z * stretch
        else:
            e_th += length / math.sqrt(2)
            e_z -= length / math.sqrt(2)
        if not (e_th > 0 and e_z > 0):
            raise DomainError(f"step {step} along {axis.value} leaves the domain")
        return BTPoint(field_for_zeeman_energy(e_z, c), e_th)
    except DomainError:
        raise
    except ValueError as exc:
        raise DomainError(f"step {step} along {axis.value} leaves the domain: {exc}") from None


def probe_state(model: ProbeModel, point: BTPoint, at_time=None, initial=None) -> SpinDistribution:
    """Steady state, or the state after `at_time` seconds from `initial` (m_F=+2)."""
    rates = model.rates(point)
    if at_time is None:
        return steady_state(rates)
    start = initial if initial is not None else SpinDistribution.pure(2)
    return evolve(start, build_generator(rates), at_time)


@dataclass(frozen=True)
class SideSpeed:
    bures: float
    speed: float

    @property
    def fisher(self) -> float:
        return 8.0 * self.speed ** 2


@dataclass(frozen=True)
class SensitivityResult:
    axis: Axis
    theta_ref: float
    delta_used: float
    bures_left: float
    bures_right: float
    speed_left: float
    speed_right: float
    normalization: str = "energy"

    @property
    def fisher_left(self) -> float:
        return 8.0 * self.speed_left ** 2

    @property
    def fisher_right(self) -> float:
        return 8.0 * self.speed_right ** 2

    @property
    def sqrt_f_left(self) -> float:
        return math.sqrt(self.fisher_left)

    @property
    def sqrt_f_right(self) -> float:
        return math.sqrt(self.fisher_right)

    def to_dict(self) -> dict:
        return {
            "axis": Axis(self.axis).value,
            "normalization": self.normalization,
            "theta_ref": self.theta_ref,
            "delta_used": self.delta_used,
            "bures_left": self.bures_left,
            "bures_right": self.bures_right,
            "speed_left": self.speed_left,
            "speed_right": self.speed_right,
            "fisher_left": self.fisher_left,
            "fisher_right": self.fisher_right,
        }


def _check_delta(delta_rel):
    if not 0 < delta_rel <= 0.1:
        raise ValueError(f"delta_rel must lie in (0, 0.1], got {delta_rel}")


def statistical_speed(model: ProbeModel, ref: BTPoint, axis: Axis, side: str,
                      delta_rel: float = 1e-3, at_time=None, normalization: str = "energy",
                      initial=None) -> SideSpeed:
    _check_delta(delta_rel)
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    step = -delta_rel if side == "left" else delta_rel
    other = displaced(ref, axis, step, model, normalization)
    p0 = probe_state(model, ref, at_time, initial)
    p1 = probe_state(model, other, at_time, initial)
    return SideSpeed(bures_distance(p0, p1), speed_between(p0, p1, delta_rel))


def sensitivity(model: ProbeModel, ref: BTPoint, axis: Axis, delta_rel: float = 1e-3,
                at_time=None, normalization: str = "energy", initial=None) -> SensitivityResult:
    """Both one-sided speeds at `ref` along `axis`."""
    _check_delta(delta_rel)
    axis = Axis(axis)
    points = [ref, displaced(ref, axis, -delta_rel, model, normalization),
              displaced(ref, axis, delta_rel, model, normalization)]
    if at_time is None:
        p0, pl, pr = (steady_state(model.rates(p)) for p in points)
    else:
        start = initial if initial is not None else SpinDistribution.pure(2)
        p0, pl, pr = evolve_many(start, [build_generator(model.rates(p)) for p in points], at_time)
    dl, dr = bures_distance(p0, pl), bures_distance(p0, pr)
    norm = math.sqrt(2.0) * delta_rel
    return SensitivityResult(axis, theta_of(ref, axis, model), delta_rel,
                             dl, dr, dl / norm, dr / norm, normalization)


def fisher_central(model: ProbeModel, ref: BTPoint, axis: Axis, h: float = 1e-4,
                   normalization: str = "energy") -> float:
    """Fisher information from a central difference of the steady state."""
    lo = steady_state(model.rates(displaced(ref, axis, -h, model, normalization)))
    hi = steady_state(model.rates(displaced(ref, axis, h, model, normalization)))
    p0 = steady_state(model.rates(ref))
    dp = (hi.probabilities - lo.probabilities) / (2 * h)
    return fisher_direct(p0, dp)


@dataclass(frozen=True)
class Profile:
    axis: Axis
    fixed_value: float
    theta: np.ndarray
    sqrt_f_left: np.ndarray
    sqrt_f_right: np.ndarray


def sensitivity_profile(model: ProbeModel, axis: Axis, fixed_value: float, theta_grid,
                        at_time=None, delta_rel: float = 1e-3, normalization: str = "energy",
                        threads: int = 1) -> Profile:
    """sqrt(F) on both sides at each reference point along one axis."""
    axis = Axis(axis)
    theta = np.asarray(theta_grid, dtype=float)
    refs = [point_on_axis(axis, fixed_value, t, model) for t in theta]

    def one(ref):
        return sensitivity(model, ref, axis, delta_rel, at_time, normalization)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, refs))
    else:
        results = [one(r) for r in refs]
    return Profile(axis, fixed_value, theta,
                   np.array([r.sqrt_f_left for r in results]),
                   np.array([r.sqrt_f_right for r in results]))
