"""Single-photon scattering off a qubit in a waveguide: dynamical map,
time-local master equation and non-Markovianity measures."""

__version__ = "0.1.0"

from .core import ConfigError, Infinite, LatticeSpec, PhysicalConfig, SemiInfinite
from .dynamical_map import MapSnapshot, MapTrajectory, apply_map, bloch_affine, choi_min_eig, solve_map
from .master_equation import RateTrajectory, extract_rates, integrate_me
from .nm_measures import MeasureReport, blp_measure, delta_closed_form, gm_measure, measure_report
from .one_excitation import solve_one_excitation
from .two_excitation import closed_form_resonant, solve_infinite, solve_semi_infinite

__all__ = [
    "ConfigError",
    "Infinite",
    "LatticeSpec",
    "MapSnapshot",
    "MapTrajectory",
    "MeasureReport",
    "PhysicalConfig",
    "RateTrajectory",
    "SemiInfinite",
    "apply_map",
    "blp_measure",
    "bloch_affine",
    "choi_min_eig",
    "closed_form_resonant",
    "delta_closed_form",
    "extract_rates",
    "gm_measure",
    "integrate_me",
    "measure_report",
    "solve_infinite",
    "solve_map",
    "solve_one_excitation",
    "solve_semi_infinite",
]
