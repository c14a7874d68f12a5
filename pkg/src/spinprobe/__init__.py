"""Spin dynamics and sensing performance of a collisional single-atom Cs probe in a Rb bath."""

__version__ = "0.1.0"

from .units import (BTPoint, EnergyPoint, PhysicalConstants, DEFAULT_CONSTANTS, zeeman_gap,
                    to_energy_point, from_energy_point, mean_rel_speed)
from .fraction import (endo_fraction, endo_fraction_quadrature, fraction_of_ratio,
                       ratio_of_fraction, fraction_derivatives, fit_fraction)
from .rates import (CrossSectionTable, CloudGeometry, TransitionRates, ProbeModel,
                    default_cross_sections, load_cross_sections, density_overlap,
                    thermal_average_sigma, compute_rates)
from .dynamics import (SpinDistribution, RateGenerator, build_generator, evolve,
                       evolve_trajectory, steady_state, steady_state_nullspace)
from .sensitivity import (Axis, SensitivityResult, bures_distance, hellinger_distance,
                          statistical_speed, sensitivity, fisher_direct, sensitivity_profile)
from .maxima import MaximaReport, EnergyBandGrouping, scan_bt_grid, locate_maxima, \
    group_by_total_energy
