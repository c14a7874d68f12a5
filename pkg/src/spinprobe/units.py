"""Physical constants and the (B, T) <-> (E_tot, E_ratio) coordinate maps.

Energies cross the public boundary in kelvin-equivalent units (E / k_B);
joules are used internally.  Magnetic fields are in gauss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

GAUSS = 1e-4  # tesla per gauss
ATOMIC_MASS = 1.66053906660e-27  # kg, CODATA 2018


@dataclass(frozen=True)
class PhysicalConstants:
    bohr_magneton: float = 9.2740100783e-24  # J/T
    boltzmann: float = 1.380649e-23  # J/K
    mass_rb: float = 86.909 * ATOMIC_MASS
    mass_cs: float = 132.905 * ATOMIC_MASS
    g_cs: float = 0.25
    g_rb: float = 0.5
    f_cs: int = 3
    f_rb: int = 1
    reduced_mass: float = field(init=False)

    def __post_init__(self):
        for name in ("bohr_magneton", "boltzmann", "mass_rb", "mass_cs", "g_cs", "g_rb"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        mu = self.mass_rb * self.mass_cs / (self.mass_rb + self.mass_cs)
        object.__setattr__(self, "reduced_mass", mu)

    def with_overrides(self, **overrides) -> "PhysicalConstants":
        return replace(self, **overrides)


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class BTPoint:
    """Bath condition: field in gauss, temperature in kelvin."""

    b_field: float
    temperature: float

    def __post_init__(self):
        if not (math.isfinite(self.b_field) and math.isfinite(self.temperature)):
            raise ValueError("BTPoint fields must be finite")
        if self.b_field < 0:
            raise ValueError(f"b_field must be >= 0, got {self.b_field}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")

    @classmethod
    def from_lab(cls, b_mG: float, t_nK: float) -> "BTPoint":
        return cls(b_mG * 1e-3, t_nK * 1e-9)


@dataclass(frozen=True)
class EnergyPoint:
    """Bath condition as total energy (kelvin-equivalent) and E_th / E_Z."""

    e_total: float
    e_ratio: float

    def __post_init__(self):
        if not (self.e_total > 0 and math.isfinite(self.e_total)):
            raise ValueError(f"e_total must be > 0, got {self.e_total}")
        if not (self.e_ratio > 0 and math.isfinite(self.e_ratio)):
            raise ValueError(f"e_ratio must be > 0, got {self.e_ratio}")


def zeeman_gap(b: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Half the Zeeman mismatch, mu_B |g_Cs| B, in joules (b in gauss)."""
    if b < 0:
        raise ValueError(f"magnetic field must be >= 0, got {b}")
    return constants.bohr_magneton * constants.g_cs * b * GAUSS


def zeeman_energy_k(b: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Zeeman energy E_Z in kelvin-equivalent."""
    return zeeman_gap(b, constants) / constants.boltzmann


def field_for_zeeman_energy(e_z: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Inverse of zeeman_energy_k: field in gauss for E_Z given in kelvin."""
    if e_z < 0:
        raise ValueError(f"Zeeman energy must be >= 0, got {e_z}")
    return e_z * constants.boltzmann / (constants.bohr_magneton * constants.g_cs * GAUSS)


def to_energy_point(p: BTPoint, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> EnergyPoint:
    if p.b_field == 0:
        raise ValueError("energy ratio undefined at zero field")
    e_z = zeeman_energy_k(p.b_field, constants)
    e_th = p.temperature
    return EnergyPoint(e_th + e_z, e_th / e_z)


def from_energy_point(e: EnergyPoint, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> BTPoint:
    # E_th = E_tot * r / (1 + r), E_Z = E_tot / (1 + r)
    e_z = e.e_total / (1.0 + e.e_ratio)
    e_th = e.e_total - e_z
    return BTPoint(field_for_zeeman_energy(e_z, constants), e_th)


def mean_rel_speed(t: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Mean relative Rb-Cs speed sqrt(8 k_B T / (pi mu)) in m/s."""
    if not t > 0:
        raise ValueError(f"temperature must be > 0, got {t}")
    return math.sqrt(8.0 * constants.boltzmann * t / (math.pi * constants.reduced_mass))
