"""Adaptive Bayesian Ramsey magnetometry at desk scale.

Simulates single-spin d.c. magnetometry with exponentially varied sensing
times, compares limited-adaptive, non-adaptive and swarm-optimized adaptive
phase-choice protocols, and reproduces their sensitivity scaling, dynamic
range, and timing-overhead behavior.
"""

from .backend import HAVE_COMPILED, active_backend_name
from .errors import (
    AdaptmagError,
    DegenerateDistributionError,
    DegenerateUpdateError,
    TrimError,
)
from .fourier import (
    FourierDistribution,
    PhaseChoice,
    controlled_phase,
    estimate_frequency,
    fourier_update,
    posterior_holevo_variance,
    trim_coefficients,
)
from .griddist import GridDistribution, brute_force_phase, grid_update
from .increments import PhaseIncrementTable, load_table, save_table
from .model import MeasurementModel, RamseySetting, outcome_likelihood, sample_outcome
from .protocol import ProtocolKind, RunTrace, run_protocol, wall_time
from .schedule import Schedule, TimingModel, make_schedule, schedule_wall_time

__version__ = "0.1.0"

__all__ = [
    "AdaptmagError",
    "DegenerateDistributionError",
    "DegenerateUpdateError",
    "FourierDistribution",
    "GridDistribution",
    "HAVE_COMPILED",
    "MeasurementModel",
    "PhaseChoice",
    "PhaseIncrementTable",
    "ProtocolKind",
    "RamseySetting",
    "RunTrace",
    "Schedule",
    "TimingModel",
    "TrimError",
    "active_backend_name",
    "brute_force_phase",
    "controlled_phase",
    "estimate_frequency",
    "fourier_update",
    "grid_update",
    "load_table",
    "make_schedule",
    "outcome_likelihood",
    "posterior_holevo_variance",
    "run_protocol",
    "sample_outcome",
    "save_table",
    "schedule_wall_time",
    "trim_coefficients",
    "wall_time",
]
