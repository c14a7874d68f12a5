"""Spin-exchange rates Gamma = <n> sigma_bar v_bar for the seven Cs sub-levels.

Endoergic transitions go m -> m+1 (m = -3..2) and must overcome the Zeeman
gap; exoergic transitions go m -> m-1 (m = -2..3) and are always open.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Union

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .fraction import mb_energy_density
from .units import DEFAULT_CONSTANTS, BTPoint, PhysicalConstants, mean_rel_speed, zeeman_gap

ENDO, EXO = "endo", "exo"
ENDO_LEVELS = tuple(range(-3, 3))
EXO_LEVELS = tuple(range(-2, 4))


@dataclass(frozen=True)
class SampledCrossSection:
    """sigma(E) sampled at ascending collision energies (kelvin-equivalent).

    Linear interpolation between samples, constant continuation outside.
    """

    energies: np.ndarray
    sigmas: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        s = np.asarray(self.sigmas, dtype=float)
        if e.size == 0 or e.shape != s.shape:
            raise ValueError("sampled cross section needs matching, non-empty arrays")
        if np.any(np.diff(e) <= 0):
            raise ValueError("cross-section energies must be strictly ascending")
        if np.any(s < 0) or np.any(e < 0):
            raise ValueError("cross sections and energies must be >= 0")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "sigmas", s)

    def __call__(self, e):
        return np.interp(e, self.energies, self.sigmas)


CrossSection = Union[float, SampledCrossSection]


@dataclass(frozen=True)
class CrossSectionTable:
    entries: Mapping[tuple, CrossSection]

    def __post_init__(self):
        expected = {(m, ENDO) for m in ENDO_LEVELS} | {(m, EXO) for m in EXO_LEVELS}
        keys = set(self.entries)
        missing = expected - keys
        extra = keys - expected
        if missing or extra:
            raise ValueError(f"cross-section table: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for key, val in self.entries.items():
            if not isinstance(val, SampledCrossSection) and not (val >= 0 and math.isfinite(val)):
                raise ValueError(f"cross section {key} must be a finite area >= 0")

    def endo(self, m):
        return self.entries[(m, ENDO)]

    def exo(self, m):
        return self.entries[(m, EXO)]

    @property
    def is_constant(self) -> bool:
        return not any(isinstance(v, SampledCrossSection) for v in self.entries.values())


def default_cross_sections(scale: float = 1e-16) -> CrossSectionTable:
    """Every transition gets the same constant area `scale` (m^2)."""
    if not scale > 0:
        raise ValueError("cross-section scale must be > 0")
    entries = {(m, ENDO): float(scale) for m in ENDO_LEVELS}
    entries.update({(m, EXO): float(scale) for m in EXO_LEVELS})
    return CrossSectionTable(entries)


def load_cross_sections(path) -> CrossSectionTable:
    """Read `m_from,direction,energy_uK,sigma_m2` rows; blank energy = constant."""
    rows: dict = {}
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if header != ["m_from", "direction", "energy_uK", "sigma_m2"]:
            raise ValueError(f"{path}: bad header {header}")
        for lineno, row in enumerate(reader, start=2):
            try:
                key = (int(row["m_from"]), row["direction"].strip())
                sigma = float(row["sigma_m2"])
                energy = row["energy_uK"].strip()
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if key[1] not in (ENDO, EXO):
                raise ValueError(f"{path}:{lineno}: direction must be endo or exo")
            slot = rows.setdefault(key, [])
            slot.append((None if energy == "" else float(energy) * 1e-6, sigma))
    entries = {}
    for key, samples in rows.items():
        if any(e is None for e, _ in samples):
            if len(samples) != 1:
                raise ValueError(f"{path}: transition {key} mixes constant and sampled rows")
            entries[key] = samples[0][1]
        else:
            samples.sort()
            entries[key] = SampledCrossSection([e for e, _ in samples], [s for _, s in samples])
    return CrossSectionTable(entries)


@dataclass(frozen=True)
class CloudGeometry:
    """Either a fixed overlap density or Gaussian Rb cloud + normalized Cs density.

    All lengths in metres, densities in m^-3.
    """

    overlap_constant: float | None = None
    rb_peak_density: float | None = None
    rb_widths: tuple = ()
    cs_widths: tuple = ()
    cs_center_offset: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.overlap_constant is not None:
            if not (self.overlap_constant >= 0 and math.isfinite(self.overlap_constant)):
                raise ValueError("overlap_constant must be >= 0")
            return
        if self.rb_peak_density is None or not self.rb_peak_density >= 0:
            raise ValueError("Gaussian geometry needs rb_peak_density >= 0")
        for name in ("rb_widths", "cs_widths", "cs_center_offset"):
            if len(getattr(self, name)) != 3:
                raise ValueError(f"{name} needs three components")
        if not all(w > 0 for w in (*self.rb_widths, *self.cs_widths)):
            raise ValueError("cloud widths must be > 0")


DEFAULT_GEOMETRY = CloudGeometry(overlap_constant=1e18)


def density_overlap(g: CloudGeometry) -> float:
    """Integral of n_Cs n_Rb over space (Cs density normalized to one atom)."""
    if g.overlap_constant is not None:
        return float(g.overlap_constant)
    out = g.rb_peak_density
    for s_rb, s_cs, x0 in zip(g.rb_widths, g.cs_widths, g.cs_center_offset):
        var = s_rb ** 2 + s_cs ** 2
        out *= s_rb / math.sqrt(var) * math.exp(-x0 ** 2 / (2 * var))
    return float(out)


def _mb_tail(x):
    return float(erfc(math.sqrt(x)) + 2.0 * math.sqrt(x / math.pi) * math.exp(-x))


def thermal_average_sigma(entry: CrossSection, t: float, threshold: float = 0.0,
                          constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Maxwell-Boltzmann average of sigma above `threshold` (joules) at temperature t.

    Collisions below the threshold contribute nothing, so a constant sigma
    gives sigma times the fraction of collisions above it.
    """
    if not t > 0:
        raise ValueError("temperature must be > 0")
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    x = threshold / (constants.boltzmann * t)
    if not isinstance(entry, SampledCrossSection):
        return float(entry) if x == 0 else float(entry) * _mb_tail(x)
    # work in units of k_B T
    e = entry.energies / t
    s = entry.sigmas
    scale = max(float(s.max()), 1e-300)

    def f(u):
        return np.interp(u, e, s) / scale * mb_energy_density(u, 1.0)

    total = 0.0
    top = e[-1]
    if x < top:
        pts = [u for u in e if x < u < top]
        val, _ = integrate.quad(f, x, top, points=pts or None, epsabs=0.0, epsrel=1e-10, limit=500)
        total += val * scale
    total += s[-1] * _mb_tail(max(x, top))
    return float(total)


@dataclass(frozen=True)
class TransitionRates:
    """Endoergic rates for m -> m+1 (m=-3..2) and exoergic for m -> m-1 (m=-2..3), s^-1."""

    endo: np.ndarray
    exo: np.ndarray

    def __post_init__(self):
        endo = np.asarray(self.endo, dtype=float)
        exo = np.asarray(self.exo, dtype=float)
        if endo.shape != (6,) or exo.shape != (6,):
            raise ValueError("need six endoergic and six exoergic rates")
        if np.any(~np.isfinite(endo)) or np.any(~np.isfinite(exo)):
            raise ValueError("rates must be finite")
        if np.any(endo < 0) or np.any(exo < 0):
            raise ValueError("rates must be >= 0")
        object.__setattr__(self, "endo", endo)
        object.__setattr__(self, "exo", exo)

    def scaled(self, c: float) -> "TransitionRates":
        return TransitionRates(self.endo * c, self.exo * c)


def compute_rates(table: CrossSectionTable, p: BTPoint, g: CloudGeometry = DEFAULT_GEOMETRY,
                  constants: PhysicalConstants = DEFAULT_CONSTANTS) -> TransitionRates:
    n = density_overlap(g)
    v = mean_rel_speed(p.temperature, constants)
    gap = zeeman_gap(p.b_field, constants)
    endo = [n * thermal_average_sigma(table.endo(m), p.temperature, gap, constants) * v
            for m in ENDO_LEVELS]
    exo = [n * thermal_average_sigma(table.exo(m), p.temperature, 0.0, constants) * v
           for m in EXO_LEVELS]
    return TransitionRates(np.array(endo), np.array(exo))


@dataclass(frozen=True)
class ProbeModel:
    """Everything needed to turn a bath condition into transition rates."""

    table: CrossSectionTable = field(default_factory=default_cross_sections)
    geometry: CloudGeometry = DEFAULT_GEOMETRY
    constants: PhysicalConstants = DEFAULT_CONSTANTS

    def rates(self, p: BTPoint) -> TransitionRates:
        return compute_rates(self.table, p, self.geometry, self.constants)
