"""Run configuration (JSON) and its validation.

Lab units are used throughout the file: mG, nK, uK, seconds, metres and
m^-3 / m^2 where noted in the key name.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .rates import CloudGeometry, CrossSectionTable, ProbeModel, default_cross_sections, \
    load_cross_sections
from .sensitivity import Axis
from .units import ATOMIC_MASS, DEFAULT_CONSTANTS, PhysicalConstants


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {e}" for e in self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Grid(_Strict):
    """Either explicit `values` or `start`/`stop`/`num` with linear or log spacing."""

    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = Field(default=None, ge=2)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _shape(self):
        if self.values is not None:
            if self.start is not None or self.stop is not None or self.num is not None:
                raise ValueError("give either values or start/stop/num, not both")
            if not self.values:
                raise ValueError("values must not be empty")
        elif None in (self.start, self.stop, self.num):
            raise ValueError("start, stop and num are all required")
        elif self.spacing == "log" and not (self.start > 0 and self.stop > 0):
            raise ValueError("log spacing needs positive start and stop")
        return self

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.num)
        return np.linspace(self.start, self.stop, self.num)


def _grid(start, stop, num, spacing="linear"):
    return Grid(start=start, stop=stop, num=num, spacing=spacing)


class Constants(_Strict):
    bohr_magneton: Optional[float] = Field(default=None, gt=0)
    boltzmann: Optional[float] = Field(default=None, gt=0)
    mass_rb_u: Optional[float] = Field(default=None, gt=0)
    mass_cs_u: Optional[float] = Field(default=None, gt=0)
    g_cs: Optional[float] = Field(default=None, gt=0)
    g_rb: Optional[float] = Field(default=None, gt=0)

    def build(self) -> PhysicalConstants:
        kw = {k: v for k, v in (("bohr_magneton", self.bohr_magneton), ("boltzmann", self.boltzmann),
                                ("g_cs", self.g_cs), ("g_rb", self.g_rb)) if v is not None}
        if self.mass_rb_u is not None:
            kw["mass_rb"] = self.mass_rb_u * ATOMIC_MASS
        if self.mass_cs_u is not None:
            kw["mass_cs"] = self.mass_cs_u * ATOMIC_MASS
        return DEFAULT_CONSTANTS.with_overrides(**kw)


class Geometry(_Strict):
    overlap_constant_m3: Optional[float] = Field(default=None, ge=0)
    rb_peak_density_m3: Optional[float] = Field(default=None, ge=0)
    rb_widths_m: Optional[List[float]] = None
    cs_widths_m: Optional[List[float]] = None
    cs_center_offset_m: List[float] = [0.0, 0.0, 0.0]

    @model_validator(mode="after")
    def _mode(self):
        gaussian = (self.rb_peak_density_m3, self.rb_widths_m, self.cs_widths_m)
        if self.overlap_constant_m3 is not None:
            if any(v is not None for v in gaussian):
                raise ValueError("give either overlap_constant_m3 or Gaussian parameters")
        elif any(v is None for v in gaussian):
            raise ValueError("Gaussian geometry needs rb_peak_density_m3, rb_widths_m, cs_widths_m")
        else:
            for name in ("rb_widths_m", "cs_widths_m", "cs_center_offset_m"):
                vals = getattr(self, name)
                if len(vals) != 3:
                    raise ValueError(f"{name} needs three components")
            if min(self.rb_widths_m + self.cs_widths_m) <= 0:
                raise ValueError("cloud widths must be > 0")
        return self

    def build(self) -> CloudGeometry:
        if self.overlap_constant_m3 is not None:
            return CloudGeometry(overlap_constant=self.overlap_constant_m3)
        return CloudGeometry(rb_peak_density=self.rb_peak_density_m3,
                             rb_widths=tuple(self.rb_widths_m), cs_widths=tuple(self.cs_widths_m),
                             cs_center_offset=tuple(self.cs_center_offset_m))


class Reference(_Strict):
    b_mG: float = Field(default=43.0, gt=0)
    t_nK: float = Field(default=435.0, gt=0)


class FractionSection(_Strict):
    grid: Grid = _grid(0.05, 3.0, 300)


class FitSection(_Strict):
    grid: Grid = _grid(0.1, 2.5, 300)
    max_iter: int = Field(default=200, ge=1)


class EvolveSection(_Strict):
    initial_m_F: Optional[int] = Field(default=None, ge=-3, le=3)
    initial_populations: Optional[List[float]] = None
    times_s: List[float] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0]

    @field_validator("times_s")
    @classmethod
    def _times(cls, v):
        if not v or any(t < 0 for t in v) or any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("times_s must be non-empty, non-negative and ascending")
        return v

    @model_validator(mode="after")
    def _initial(self):
        if self.initial_m_F is not None and self.initial_populations is not None:
            raise ValueError("give either initial_m_F or initial_populations")
        if self.initial_populations is not None:
            p = self.initial_populations
            if len(p) != 7 or min(p) < 0 or abs(sum(p) - 1) > 1e-9:
                raise ValueError("initial_populations needs 7 non-negative entries summing to 1")
        return self


class ProfileSection(_Strict):
    axis: Axis = Axis.CONST_ETOT_VARY_RATIO
    fixed: float = Field(default=1.6, gt=0)
    grid: Grid = _grid(0.1, 2.0, 200)


class ScanSection(_Strict):
    b_mG: Grid = _grid(10.0, 80.0, 10)
    t_nK: Grid = _grid(200.0, 1000.0, 10)


class MaximaSection(_Strict):
    e_total_uK: List[float] = [0.7, 1.1, 1.3, 1.6, 1.91, 2.2]
    ratio_grid: Grid = _grid(0.1, 2.0, 400)

    @field_validator("e_total_uK")
    @classmethod
    def _positive(cls, v):
        if not v or min(v) <= 0:
            raise ValueError("e_total_uK entries must be positive")
        return v


class Output(_Strict):
    path: Optional[str] = None
    format: Optional[Literal["csv", "json", "gnuplot"]] = None


class RunConfig(_Strict):
    constants: Constants = Constants()
    cross_section_file: Optional[str] = None
    cross_section_scale_m2: float = Field(default=1e-16, gt=0)
    geometry: Geometry = Geometry(overlap_constant_m3=1e18)
    reference: Reference = Reference()
    axes: List[Axis] = list(Axis)
    delta_rel: float = Field(default=1e-3, gt=0, le=0.1)
    at_time_s: Optional[float] = Field(default=None, ge=0)
    normalization: Literal["energy", "relative"] = "energy"
    threads: Optional[int] = Field(default=None, ge=1)
    fraction: FractionSection = FractionSection()
    fit: FitSection = FitSection()
    evolve: EvolveSection = EvolveSection()
    profile: ProfileSection = ProfileSection()
    scan: ScanSection = ScanSection()
    maxima: MaximaSection = MaximaSection()
    output: Output = Output()

    def to_json_dict(self) -> dict:
        return self.model_dump(mode="json")

    def table(self, base_dir=None) -> CrossSectionTable:
        if self.cross_section_file is None:
            return default_cross_sections(self.cross_section_scale_m2)
        path = Path(self.cross_section_file)
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        return load_cross_sections(path)

    def model(self, base_dir=None) -> ProbeModel:
        return ProbeModel(self.table(base_dir), self.geometry.build(), self.constants.build())


def _format_loc(loc) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def validate_config(data: dict, base_dir=None) -> RunConfig:
    """Validate a decoded JSON document; raise ConfigError listing every problem."""
    if not isinstance(data, dict):
        raise ConfigError(["<root>: configuration must be a JSON object"])
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError([f"{_format_loc(e['loc'])}: {e['msg']}" for e in exc.errors()]) from None
    if cfg.cross_section_file is not None:
        try:
            cfg.table(base_dir)
        except (OSError, ValueError) as exc:
            raise ConfigError([f"cross_section_file: {exc}"]) from None
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([f"<file>: {exc}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: not valid JSON ({exc})"]) from None
    return validate_config(data, path.parent)
