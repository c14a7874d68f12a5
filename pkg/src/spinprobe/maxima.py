"""Sensitivity maxima in (B, T) space and their relation to p(E_ratio)."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fraction import fraction_derivatives, fraction_of_ratio, refine_peak
from .rates import ProbeModel
from .sensitivity import Axis, Profile, sensitivity, sensitivity_profile
from .units import BTPoint, to_energy_point

# Tolerance in E_ratio for calling a maximum "close" to a derivative peak.
# The comparison is qualitative; this bracket is a chosen convention.
ALIGNMENT_BRACKET = 0.1
EXPERIMENTAL_B_RANGE = (0.010, 0.080)  # gauss
FIG7_TOTAL_ENERGIES_UK = (0.7, 1.1, 1.3, 1.6, 1.91, 2.2)


@dataclass(frozen=True)
class PeakInfo:
    location: float
    value: float
    interior: bool
    outside_experimental_control: bool = False


def profile_peak(x, y, axis: Axis | None = None) -> PeakInfo:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.nanargmax(y))
    interior = 0 < i < len(x) - 1
    loc = refine_peak(x, y, i)
    outside = (axis is not None and Axis(axis) is Axis.CONST_T_VARY_B
               and not EXPERIMENTAL_B_RANGE[0] <= loc <= EXPERIMENTAL_B_RANGE[1])
    return PeakInfo(loc, float(y[i]), interior, outside)


def profile_peaks(profile: Profile) -> dict:
    return {"left": profile_peak(profile.theta, profile.sqrt_f_left, profile.axis),
            "right": profile_peak(profile.theta, profile.sqrt_f_right, profile.axis)}


@dataclass(frozen=True)
class MaximaReport:
    e_tot: float
    ratio_at_left_max: float
    ratio_at_right_max: float
    ratio_at_d1_max: float
    ratio_at_d2_max: float
    fraction_at_left_max: float
    fraction_at_right_max: float
    left_interior: bool
    right_interior: bool
    alignment_bracket: float = ALIGNMENT_BRACKET

    @property
    def deviation_left(self) -> float:
        return abs(self.ratio_at_left_max - self.ratio_at_d1_max)

    @property
    def deviation_right(self) -> float:
        return abs(self.ratio_at_right_max - self.ratio_at_d2_max)

    def to_dict(self) -> dict:
        return {
            "e_tot_uK": self.e_tot * 1e6,
            "ratio_at_left_max": self.ratio_at_left_max,
            "ratio_at_right_max": self.ratio_at_right_max,
            "ratio_at_d1_max": self.ratio_at_d1_max,
            "ratio_at_d2_max": self.ratio_at_d2_max,
            "fraction_at_left_max": self.fraction_at_left_max,
            "fraction_at_right_max": self.fraction_at_right_max,
            "left_interior": self.left_interior,
            "right_interior": self.right_interior,
            "deviation_left": self.deviation_left,
            "deviation_right": self.deviation_right,
            "alignment_bracket": self.alignment_bracket,
            "alignment_bracket_note": "chosen convention, not a published tolerance",
        }


def locate_maxima(model: ProbeModel, e_tot: float, ratio_grid, at_time=None,
                  delta_rel: float = 1e-3, normalization: str = "energy") -> MaximaReport:
    """Left/right sensitivity maxima along constant total energy e_tot (kelvin)."""
    grid = np.unique(np.asarray(ratio_grid, dtype=float))
    if grid.size < 200 or grid[0] > 0.1 or grid[-1] < 2.0:
        raise ValueError("ratio grid must span [0.1, 2.0] with at least 200 points")
    prof = sensitivity_profile(model, Axis.CONST_ETOT_VARY_RATIO, e_tot, grid,
                               at_time, delta_rel, normalization)
    peaks = profile_peaks(prof)
    deriv = fraction_derivatives(grid)
    left, right = peaks["left"], peaks["right"]
    return MaximaReport(
        e_tot=e_tot,
        ratio_at_left_max=left.location,
        ratio_at_right_max=right.location,
        ratio_at_d1_max=deriv.first_argmax,
        ratio_at_d2_max=deriv.second_argmax,
        fraction_at_left_max=float(fraction_of_ratio(left.location)),
        fraction_at_right_max=float(fraction_of_ratio(right.location)),
        left_interior=left.interior,
        right_interior=right.interior,
    )


SCAN_FIELDS = ("b_field", "temperature", "axis", "theta_ref", "sqrt_f_left", "sqrt_f_right", "error")


def scan_bt_grid(model: ProbeModel, b_grid, t_grid, at_time=None, delta_rel: float = 1e-3,
                 normalization: str = "energy", axes=tuple(Axis), threads: int = 1) -> list:
    """Long-format rows, one per (B, T, axis); failing cells carry an error string."""
    b = np.unique(np.asarray(b_grid, dtype=float))
    t = np.unique(np.asarray(t_grid, dtype=float))
    if b.size < 10 or t.size < 10:
        raise ValueError("scan grids need at least 10 distinct values each")
    axes = [Axis(a) for a in axes]
    cells = [(bi, ti, ax) for bi in b for ti in t for ax in axes]

    def one(cell):
        bi, ti, ax = cell
        try:
            res = sensitivity(model, BTPoint(bi, ti), ax, delta_rel, at_time, normalization)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            return {"b_field": bi, "temperature": ti, "axis": ax.value, "theta_ref": math.nan,
                    "sqrt_f_left": math.nan, "sqrt_f_right": math.nan, "error": str(exc)}
        return {"b_field": bi, "temperature": ti, "axis": ax.value, "theta_ref": res.theta_ref,
                "sqrt_f_left": res.sqrt_f_left, "sqrt_f_right": res.sqrt_f_right, "error": ""}

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, cells))
    return [one(c) for c in cells]


@dataclass(frozen=True)
class EnergyBandGrouping:
    band_centers: tuple
    assignments: tuple  # per point, tuple of band indices
    tolerance: float
    mean_deviation: float  # over all (point, band) memberships; nan if none
    deviations: tuple = field(default=())


def group_by_total_energy(points, centers, tolerance: float = 0.25, constants=None) -> EnergyBandGrouping:
    """Assign each (B, T) point to every band whose centre lies within `tolerance` (relative)."""
    centers = tuple(float(c) for c in centers)
    if any(not c > 0 for c in centers):
        raise ValueError("band centres must be positive")
    kwargs = {} if constants is None else {"constants": constants}
    assignments, deviations = [], []
    for p in points:
        e = to_energy_point(p, **kwargs).e_total
        devs = [abs(e - c) / c for c in centers]
        hits = tuple(i for i, d in enumerate(devs) if d < tolerance)
        assignments.append(hits)
        deviations.append(tuple(devs[i] for i in hits))
    flat = [d for row in deviations for d in row]
    mean = float(np.mean(flat)) if flat else math.nan
    return EnergyBandGrouping(centers, tuple(assignments), tolerance, mean, tuple(deviations))
