"""The three estimation protocols and their run records.

All protocols share the same skeleton: walk the schedule's Ramsey sequence,
pick a readout phase, draw an outcome, fold it into the posterior. They
differ only in how the phase is picked:

* ``limited_adaptive``   - recompute the controlled phase once per sensing
  time, when it changes;
* ``non_adaptive``       - sweep fixed phases (m-1)*pi/M_n, no feedback;
* ``optimized_adaptive`` - recompute the controlled phase before every
  Ramsey and add a trained increment keyed on (n, m, last outcome).

The heavy lifting happens in a backend kernel (see ``backend``); this module
prepares the per-step arrays, the harmonic-trimming caps, and packages the
result as a :class:`RunTrace`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import backend as _backend
from .errors import DegenerateDistributionError
from .fourier import FourierDistribution, estimate_frequency
from .increments import PhaseIncrementTable
from .model import MeasurementModel
from .schedule import Schedule, TimingModel, WallTimeBreakdown, schedule_wall_time
from .util import TAU, wrap_angle


class ProtocolKind(str, Enum):
    LIMITED_ADAPTIVE = "limited_adaptive"
    NON_ADAPTIVE = "non_adaptive"
    OPTIMIZED_ADAPTIVE = "optimized_adaptive"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]


_KIND_CODES = {
    ProtocolKind.LIMITED_ADAPTIVE: 0,
    ProtocolKind.NON_ADAPTIVE: 1,
    ProtocolKind.OPTIMIZED_ADAPTIVE: 2,
}


@dataclass
class RunTrace:
    """Complete record of one estimation sequence."""

    kind: ProtocolKind
    schedule: Schedule
    f_true: float
    stage: np.ndarray  # n per Ramsey
    rep: np.ndarray  # m per Ramsey
    t_units: np.ndarray
    theta: np.ndarray  # applied phase per Ramsey
    outcome: np.ndarray
    posterior: FourierDistribution
    f_estimate: float
    degenerate_phases: int

    @property
    def n_ramseys(self) -> int:
        return len(self.outcome)

    @property
    def sensing_time(self) -> float:
        return self.schedule.total_sensing_time

    def wall_time(self, timing: TimingModel) -> WallTimeBreakdown:
        return schedule_wall_time(self.schedule, timing)

    def to_json(self, timing: TimingModel | None = None) -> str:
        timing = timing or TimingModel()
        wall = self.wall_time(timing)
        doc = {
            "protocol": self.kind.value,
            "schedule": {
                "N": self.schedule.n_steps,
                "G": self.schedule.g,
                "F": self.schedule.f,
                "tau_min_s": self.schedule.tau_min,
            },
            "f_true_hz": self.f_true,
            "estimate_hz": self.f_estimate,
            "sensing_time_s": self.sensing_time,
            "degenerate_phases": self.degenerate_phases,
            "steps": [
                {
                    "step": i,
                    "n": int(self.stage[i]),
                    "m": int(self.rep[i]),
                    "t_units": int(self.t_units[i]),
                    "theta": float(self.theta[i]),
                    "outcome": int(self.outcome[i]),
                }
                for i in range(self.n_ramseys)
            ],
            "timings": {
                "init_s": wall.init,
                "sensing_s": wall.sensing,
                "readout_s": wall.readout,
                "compute_s": wall.compute,
                "total_s": wall.total,
            },
            "posterior": {
                "tau_min_s": self.posterior.tau_min,
                "coefficients": [
                    {"k": k, "re": c.real, "im": c.imag}
                    for k, c in sorted(self.posterior.coeffs.items())
                ],
            },
        }
        return json.dumps(doc, indent=2)

    def save(self, path: str | Path, timing: TimingModel | None = None) -> None:
        Path(path).write_text(self.to_json(timing))


def wall_time(trace: RunTrace, timing: TimingModel) -> WallTimeBreakdown:
    """Wall-clock breakdown of a completed run (init/sensing/readout/compute)."""
    return trace.wall_time(timing)


@lru_cache(maxsize=512)
def _step_arrays(schedule: Schedule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    steps = list(schedule.steps())
    stage = np.array([s[0] for s in steps], dtype=np.int64)
    rep = np.array([s[1] for s in steps], dtype=np.int64)
    t_units = np.array([s[2] for s in steps], dtype=np.int64)
    return stage, rep, t_units


@lru_cache(maxsize=512)
def _damping_per_step(schedule: Schedule, model: MeasurementModel) -> np.ndarray:
    _stage, _rep, t_units = _step_arrays(schedule)
    return np.array([model.damping(int(t) * model.tau_min) for t in t_units])


@lru_cache(maxsize=512)
def _cached_caps(
    schedule: Schedule, kind: ProtocolKind, trim: bool, keep_final: int
) -> np.ndarray:
    return step_caps(schedule, kind, trim=trim, keep_final=keep_final)


@lru_cache(maxsize=512)
def _stage_reps(schedule: Schedule) -> np.ndarray:
    return np.array([schedule.reps(n) for n in schedule.stages], dtype=np.int64)


def _reads_phase(kind: ProtocolKind, rep: np.ndarray) -> np.ndarray:
    if kind is ProtocolKind.OPTIMIZED_ADAPTIVE:
        return np.ones(len(rep), dtype=bool)
    if kind is ProtocolKind.LIMITED_ADAPTIVE:
        return rep == 1
    return np.zeros(len(rep), dtype=bool)


def step_caps(
    schedule: Schedule,
    kind: ProtocolKind,
    trim: bool = True,
    keep_final: int = 1,
) -> np.ndarray:
    """Highest harmonic index worth keeping after each Bayesian update.

    Computed by walking the schedule backwards from the estimator's needs
    (harmonic 1, or ``keep_final`` if a richer final posterior is wanted):
    an update at ``t`` pulls index k from k +- t, and a controlled-phase
    read needs index ``2*t`` to be alive. Trimming to these caps leaves
    every phase choice and the final estimate bit-identical to an
    untrimmed run, while the live coefficient count stays of order M_n.
    """
    _stage, rep, t_units = _step_arrays(schedule)
    n = len(t_units)
    caps = np.empty(n, dtype=np.int64)
    if not trim:
        reachable = np.cumsum(t_units)
        np.maximum(reachable, keep_final, out=caps)
        return caps
    reads = _reads_phase(kind, rep)
    need = max(1, int(keep_final))
    for i in range(n - 1, -1, -1):
        caps[i] = need
        need += int(t_units[i])
        if reads[i]:
            need = max(need, 2 * int(t_units[i]))
    return caps


def required_indices(schedule: Schedule, kind: ProtocolKind, after_step: int) -> set[int]:
    """Exact harmonic indices still feeding phase choices and the estimate.

    ``after_step`` counts completed updates (0 = before the first Ramsey).
    Exponential in sequence length; intended for validating trims on small
    schedules, not for production runs (which use :func:`step_caps`).
    """
    _stage, rep, t_units = _step_arrays(schedule)
    reads = _reads_phase(kind, rep)
    need = {0, 1}
    for i in range(len(t_units) - 1, after_step - 1, -1):
        t = int(t_units[i])
        need |= {k + t for k in need} | {abs(k - t) for k in need}
        if reads[i]:
            need.add(2 * t)
    return need


def run_protocol(
    kind: ProtocolKind | str,
    schedule: Schedule,
    model: MeasurementModel,
    f_true: float,
    rng: np.random.Generator | int,
    increments: PhaseIncrementTable | None = None,
    phase_quantization: bool = False,
    phase_offset: float = 0.0,
    trim: bool = True,
    keep_final: int = 1,
    backend: str | None = None,
) -> RunTrace:
    """Run one estimation sequence and return its trace.

    ``rng`` may be a seed or a numpy Generator; the same seed reproduces the
    trace bit-for-bit. ``increments`` is required for (and only for) the
    optimized protocol. ``phase_quantization`` rounds every applied phase to
    the 8-bit resolution of the pulse hardware. ``keep_final`` widens the
    harmonic budget of the returned posterior beyond the estimator's
    minimum of 1 (useful when the caller wants to plot it).
    """
    kind = ProtocolKind(kind)
    if not math.isclose(model.tau_min, schedule.tau_min, rel_tol=0.0, abs_tol=0.0):
        raise ValueError(
            f"model.tau_min ({model.tau_min}) differs from schedule.tau_min ({schedule.tau_min})"
        )
    # half-open principal cell: -f_max maps to phase -pi, +f_max aliases it
    if not -model.max_frequency <= f_true < model.max_frequency:
        raise ValueError(
            f"f_true={f_true} outside the unambiguous range "
            f"[{-model.max_frequency}, {model.max_frequency})"
        )
    if kind is ProtocolKind.OPTIMIZED_ADAPTIVE:
        if increments is None:
            raise ValueError("optimized_adaptive requires a phase-increment table")
        inc0, inc1 = increments.flattened_for(schedule)
    else:
        if increments is not None:
            raise ValueError(f"{kind.value} does not accept a phase-increment table")
        inc0 = inc1 = np.zeros(schedule.total_ramseys)

    stage, rep, t_units = _step_arrays(schedule)
    damp = _damping_per_step(schedule, model)
    caps = _cached_caps(schedule, kind, trim, int(keep_final))
    stage_reps = _stage_reps(schedule)
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    uniforms = rng.random(schedule.total_ramseys)
    phi_true = wrap_angle(TAU * f_true * model.tau_min)

    _name, module = _backend.resolve_backend(backend)
    outcomes, thetas, coeffs, degenerate = module.run_steps(
        kind.code,
        stage,
        rep,
        t_units,
        stage_reps,
        damp,
        caps,
        model.mean_level,
        0.5 * model.visibility,
        phi_true,
        uniforms,
        np.ascontiguousarray(inc0),
        np.ascontiguousarray(inc1),
        phase_offset,
        phase_quantization,
    )

    posterior = FourierDistribution(
        {k: complex(c) for k, c in enumerate(coeffs) if c != 0 or k == 0},
        model.tau_min,
    )
    try:
        f_est = estimate_frequency(posterior)
    except DegenerateDistributionError:
        raise DegenerateDistributionError(
            "protocol finished with a posterior that has no circular mean; "
            "this indicates a fully symmetric outcome record"
        )

    return RunTrace(
        kind=kind,
        schedule=schedule,
        f_true=f_true,
        stage=stage,
        rep=rep,
        t_units=t_units,
        theta=thetas,
        outcome=outcomes,
        posterior=posterior,
        f_estimate=f_est,
        degenerate_phases=degenerate,
    )
