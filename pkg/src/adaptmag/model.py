"""Phenomenological Ramsey outcome model.

A single Ramsey run with sensing time ``tau`` and final-pulse phase
``theta`` reports outcome 0 with probability::

    P(0 | f_b) = (1 + f0 - f1)/2
               + (f0 + f1 - 1)/2 * exp(-(tau/t2_star)**2) * cos(2*pi*f_b*tau + theta)

where ``f0``/``f1`` are the readout fidelities for the two spin states and
``t2_star`` is the Gaussian dephasing time. This expression is the entire
physics model used by the package; everything else is inference on top of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MeasurementModel:
    """Readout fidelities, dephasing time, and base sensing time.

    ``t2_star=math.inf`` is allowed and means no dephasing. The default
    values are the experimental ones used throughout: F0=0.88, F1=0.98,
    T2*=96 us, tau_min=20 ns.
    """

    f0: float = 0.88
    f1: float = 0.98
    t2_star: float = 96e-6
    tau_min: float = 20e-9

    def __post_init__(self) -> None:
        if not 0.0 <= self.f0 <= 1.0:
            raise ValueError(f"f0 must be in [0, 1], got {self.f0}")
        if not 0.0 <= self.f1 <= 1.0:
            raise ValueError(f"f1 must be in [0, 1], got {self.f1}")
        if not self.t2_star > 0.0:
            raise ValueError(f"t2_star must be positive (inf allowed), got {self.t2_star}")
        if not (self.tau_min > 0.0 and math.isfinite(self.tau_min)):
            raise ValueError(f"tau_min must be positive and finite, got {self.tau_min}")
        # With fidelities in [0, 1] the likelihood is bounded by the two
        # readout levels f0 and 1 - f1, so it stays inside [0, 1] for every
        # phase; nothing further to check.

    @property
    def mean_level(self) -> float:
        """Outcome-0 probability at zero contrast, (1 + f0 - f1)/2."""
        return 0.5 * (1.0 + self.f0 - self.f1)

    @property
    def visibility(self) -> float:
        """Amplitude (f0 + f1 - 1)/2 of the interference term before damping."""
        return 0.5 * (self.f0 + self.f1 - 1.0)

    @property
    def max_frequency(self) -> float:
        """Half-width 1/(2*tau_min) of the unambiguous frequency range."""
        return 0.5 / self.tau_min

    def damping(self, tau: float) -> float:
        """Gaussian coherence factor exp(-(tau/t2_star)^2)."""
        if math.isinf(self.t2_star):
            return 1.0
        x = tau / self.t2_star
        return math.exp(-x * x)


@dataclass(frozen=True)
class RamseySetting:
    """One Ramsey configuration: sensing time in units of tau_min, and phase."""

    t_units: int
    theta: float = 0.0

    def __post_init__(self) -> None:
        if self.t_units < 1:
            raise ValueError(f"t_units must be >= 1, got {self.t_units}")

    def tau(self, tau_min: float) -> float:
        return self.t_units * tau_min


def outcome_likelihood(model: MeasurementModel, f_b: float, setting: RamseySetting) -> float:
    """Probability of outcome 0 for a Ramsey at the given detuning and setting."""
    tau = setting.tau(model.tau_min)
    phase = math.tau * f_b * tau + setting.theta
    return model.mean_level + model.visibility * model.damping(tau) * math.cos(phase)


def sample_outcome(
    model: MeasurementModel,
    f_b: float,
    setting: RamseySetting,
    rng: np.random.Generator,
) -> int:
    """Draw one Ramsey outcome (0 or 1) from the outcome likelihood."""
    p0 = outcome_likelihood(model, f_b, setting)
    return 0 if rng.random() < p0 else 1
