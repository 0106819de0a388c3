"""Estimation-sequence bookkeeping: sensing times, repetition counts, wall clock.

An estimation sequence visits ``n_steps`` sensing times
``tau_n = 2**(n_steps - n) * tau_min`` (n = 1..N, longest first) and runs
``M_n = g + f*(n-1)`` Ramseys at each. Closed forms used throughout:

    R_N = g*N + f*N*(N-1)/2                       total Ramsey count
    T   = tau_min * (g*(2^N - 1) + f*(2^N - N - 1))   total sensing time
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Schedule:
    n_steps: int
    g: int
    f: int
    tau_min: float = 20e-9

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.g < 1:
            raise ValueError(f"g must be >= 1, got {self.g}")
        if self.f < 0:
            raise ValueError(f"f must be >= 0, got {self.f}")
        if not self.tau_min > 0.0:
            raise ValueError(f"tau_min must be positive, got {self.tau_min}")

    def t_units(self, n: int) -> int:
        """Sensing time multiplier 2**(N-n) for stage n (1-based)."""
        self._check_stage(n)
        return 1 << (self.n_steps - n)

    def sensing_time(self, n: int) -> float:
        return self.t_units(n) * self.tau_min

    def reps(self, n: int) -> int:
        """Ramsey count M_n = g + f*(n-1) at stage n."""
        self._check_stage(n)
        return self.g + self.f * (n - 1)

    @property
    def sensing_times(self) -> np.ndarray:
        return np.array([self.sensing_time(n) for n in self.stages])

    @property
    def rep_counts(self) -> np.ndarray:
        return np.array([self.reps(n) for n in self.stages])

    @property
    def stages(self) -> range:
        return range(1, self.n_steps + 1)

    @property
    def total_ramseys(self) -> int:
        n = self.n_steps
        return self.g * n + self.f * n * (n - 1) // 2

    @property
    def total_sensing_units(self) -> int:
        """Total sensing time in units of tau_min (exact integer)."""
        n = self.n_steps
        two_n = 1 << n
        return self.g * (two_n - 1) + self.f * (two_n - n - 1)

    @property
    def total_sensing_time(self) -> float:
        return self.total_sensing_units * self.tau_min

    def steps(self):
        """Yield (stage n, rep m, t_units) over the whole sequence, in order."""
        for n in self.stages:
            t = self.t_units(n)
            for m in range(1, self.reps(n) + 1):
                yield n, m, t

    def _check_stage(self, n: int) -> None:
        if not 1 <= n <= self.n_steps:
            raise ValueError(f"stage must be in 1..{self.n_steps}, got {n}")


def make_schedule(n_steps: int, g: int, f: int, tau_min: float = 20e-9) -> Schedule:
    return Schedule(n_steps, g, f, tau_min)


# Published compute-time endpoints: the per-Ramsey Bayesian-update duration
# grows linearly from 80 us at stage 2 to 190 us at stage 12.
_COMPUTE_LO_STAGE = 2
_COMPUTE_HI_STAGE = 12
_COMPUTE_LO = 80e-6
_COMPUTE_HI = 190e-6


@dataclass(frozen=True)
class TimingModel:
    """Per-Ramsey overhead durations.

    ``t_init`` is the spin-initialization time, ``t_read`` the readout time.
    With ``compute_overlapped`` the posterior update runs during the next
    initialization and costs nothing; otherwise each Ramsey pays
    ``t_compute(n)``.
    """

    t_init: float = 150e-6
    t_read: float = 10e-6
    compute_overlapped: bool = True

    def __post_init__(self) -> None:
        if self.t_init < 0.0 or self.t_read < 0.0:
            raise ValueError("overhead durations must be >= 0")

    def t_compute(self, n: int) -> float:
        """Bayesian-update duration at stage n: linear between the published
        endpoints, clamped outside them."""
        n_eff = min(max(n, _COMPUTE_LO_STAGE), _COMPUTE_HI_STAGE)
        frac = (n_eff - _COMPUTE_LO_STAGE) / (_COMPUTE_HI_STAGE - _COMPUTE_LO_STAGE)
        return _COMPUTE_LO + frac * (_COMPUTE_HI - _COMPUTE_LO)


@dataclass(frozen=True)
class WallTimeBreakdown:
    init: float
    sensing: float
    readout: float
    compute: float

    @property
    def total(self) -> float:
        return self.init + self.sensing + self.readout + self.compute


def schedule_wall_time(schedule: Schedule, timing: TimingModel) -> WallTimeBreakdown:
    """Wall-clock budget of one estimation sequence under a timing model."""
    r = schedule.total_ramseys
    compute = 0.0
    if not timing.compute_overlapped:
        compute = sum(timing.t_compute(n) for n, _m, _t in schedule.steps())
    return WallTimeBreakdown(
        init=r * timing.t_init,
        sensing=schedule.total_sensing_time,
        readout=r * timing.t_read,
        compute=compute,
    )
