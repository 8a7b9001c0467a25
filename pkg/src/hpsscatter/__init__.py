"""Variable-media Helmholtz scattering: a hierarchical impedance-map direct
solver inside the unit square coupled to a second-kind boundary integral
equation outside it."""

from .errors import (AccuracyError, ConfigError, DomainResonanceError, MergeResonanceError,
                     ResonanceError, SolverError)
from .fields import build_scene, eval_total, eval_total_grid, solve_scene
from .potentials import builtin
from .radial_oracle import reference_field, scattering_phases

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "ConfigError",
    "DomainResonanceError",
    "MergeResonanceError",
    "ResonanceError",
    "SolverError",
    "build_scene",
    "builtin",
    "eval_total",
    "eval_total_grid",
    "reference_field",
    "scattering_phases",
    "solve_scene",
]
