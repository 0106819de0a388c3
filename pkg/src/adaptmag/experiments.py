"""Reproduction harness: sweeps, scaling curves, ensemble statistics, output files.

Everything here is deterministic given (configuration, master seed): each
(detuning, repetition) cell derives its own random stream from the master
seed and its indices, so results do not depend on execution order or worker
count.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .increments import PhaseIncrementTable
from .model import MeasurementModel
from .protocol import ProtocolKind, run_protocol
from .schedule import Schedule, TimingModel, schedule_wall_time
from .util import TAU, derived_rng


# ---------------------------------------------------------------------------
# ensemble statistics

# Resultants below this are treated as exactly symmetric (uniform spread);
# a true |z| this small would need ~1e18 samples to distinguish from zero.
_DEGENERATE_RESULTANT = 1e-9


def ensemble_holevo_variance(estimates: Sequence[float], tau_min: float) -> float:
    """Holevo variance of a set of frequency estimates.

    Maps each estimate onto the unit circle through its sensing phase
    (exp(i*2*pi*f*tau_min)), averages, and returns |mean|^-2 - 1. Returns
    +inf when the resultant vanishes (estimates symmetrically spread).
    """
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("estimates must be non-empty")
    z = np.mean(np.exp(1j * TAU * est * tau_min))
    r2 = z.real * z.real + z.imag * z.imag
    if r2 < _DEGENERATE_RESULTANT * _DEGENERATE_RESULTANT:
        return math.inf
    # |z| <= 1 exactly; clamp the rounding residue when all estimates coincide
    return max(1.0 / float(r2) - 1.0, 0.0)


def bootstrap_ci(
    samples: Sequence[float],
    statistic: Callable[[np.ndarray], float],
    resamples: int = 1000,
    confidence: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile-bootstrap confidence interval for ``statistic(samples)``."""
    data = np.asarray(samples, dtype=float)
    if data.size == 0:
        raise ValueError("samples must be non-empty")
    if resamples < 100:
        raise ValueError("resamples must be >= 100 for a usable interval")
    rng = derived_rng(seed, 0xB007)
    stats = np.empty(resamples)
    n = data.size
    for i in range(resamples):
        stats[i] = statistic(data[rng.integers(0, n, n)])
    alpha = 0.5 * (1.0 - confidence)
    finite = stats[np.isfinite(stats)]
    if finite.size == 0:
        return math.inf, math.inf
    lo = float(np.quantile(finite, alpha))
    hi = float(np.quantile(finite, 1.0 - alpha))
    return lo, hi


@dataclass
class EnsembleStats:
    """Repeated-estimation summary at one detuning."""

    detuning: float
    estimates: np.ndarray
    holevo_variance: float
    ci: tuple[float, float]


# ---------------------------------------------------------------------------
# simulation cells and the work pool

def detuning_grid(count: int, tau_min: float = 20e-9) -> np.ndarray:
    """Uniform detunings covering the unambiguous range [-1/(2*tau), 1/(2*tau))."""
    f_max = 0.5 / tau_min
    return np.linspace(-f_max, f_max, count, endpoint=False)


def run_estimates(
    kind: ProtocolKind,
    schedule: Schedule,
    model: MeasurementModel,
    f_b: float,
    reps: int,
    seed: int,
    cell: tuple[int, ...] = (),
    increments: PhaseIncrementTable | None = None,
    phase_quantization: bool = False,
) -> np.ndarray:
    """``reps`` independent protocol runs at one detuning; returns estimates."""
    out = np.empty(reps)
    for r in range(reps):
        rng = derived_rng(seed, *cell, r)
        trace = run_protocol(
            kind,
            schedule,
            model,
            f_b,
            rng,
            increments=increments,
            phase_quantization=phase_quantization,
        )
        out[r] = trace.f_estimate
    return out


def _sweep_cell(args) -> tuple[int, np.ndarray]:
    (kind, schedule, model, f_b, reps, seed, det_idx, increments, quantize) = args
    est = run_estimates(
        kind,
        schedule,
        model,
        f_b,
        reps,
        seed,
        cell=(kind.code, schedule.n_steps, det_idx),
        increments=increments,
        phase_quantization=quantize,
    )
    return det_idx, est


def _pool_map(tasks: list, workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(tasks) <= 1:
        return [_sweep_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_cell, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def estimate_matrix(
    kind: ProtocolKind,
    schedule: Schedule,
    model: MeasurementModel,
    detunings: np.ndarray,
    reps: int,
    seed: int,
    increments: PhaseIncrementTable | None = None,
    phase_quantization: bool = False,
    workers: int | None = None,
) -> np.ndarray:
    """Estimates for every (detuning, repetition) cell, shape (D, reps)."""
    kind = ProtocolKind(kind)
    tasks = [
        (kind, schedule, model, float(f_b), reps, seed, i, increments, phase_quantization)
        for i, f_b in enumerate(detunings)
    ]
    out = np.empty((len(detunings), reps))
    for det_idx, est in _pool_map(tasks, workers):
        out[det_idx] = est
    return out


# ---------------------------------------------------------------------------
# detuning sweep

def detuning_sweep(
    kind: ProtocolKind,
    schedule: Schedule,
    model: MeasurementModel,
    detunings: Sequence[float],
    reps: int,
    seed: int,
    increments: PhaseIncrementTable | None = None,
    phase_quantization: bool = False,
    resamples: int = 500,
    confidence: float = 0.95,
    workers: int | None = None,
) -> list[EnsembleStats]:
    """Ensemble Holevo variance (with bootstrap CI) at each detuning."""
    detunings = np.asarray(detunings, dtype=float)
    matrix = estimate_matrix(
        kind, schedule, model, detunings, reps, seed,
        increments=increments, phase_quantization=phase_quantization, workers=workers,
    )
    stats = []
    for i, f_b in enumerate(detunings):
        est = matrix[i]
        vh = ensemble_holevo_variance(est, schedule.tau_min)
        if reps > 1:
            ci = bootstrap_ci(
                est,
                lambda s: ensemble_holevo_variance(s, schedule.tau_min),
                resamples=resamples,
                confidence=confidence,
                seed=seed + i,
            )
        else:
            ci = (vh, vh)
        stats.append(EnsembleStats(float(f_b), est, vh, ci))
    return stats


# ---------------------------------------------------------------------------
# sensitivity scaling

@dataclass(frozen=True)
class FieldConversion:
    """Gyromagnetic ratio over 2*pi: hertz of precession per tesla."""

    gamma_over_2pi: float = 2.8e10  # 28 MHz/mT

    def __post_init__(self) -> None:
        if not self.gamma_over_2pi > 0:
            raise ValueError("gamma_over_2pi must be positive")


def field_sensitivity(
    v_h: float,
    total_time: float,
    tau_min: float,
    conv: FieldConversion = FieldConversion(),
) -> float:
    """Magnetic-field sensitivity in nT/sqrt(Hz).

    sqrt(V_H)/(2*pi*tau_min) is the frequency uncertainty; dividing by
    gamma/2*pi converts to tesla, multiplying by sqrt(total_time) fixes the
    per-root-hertz normalization.
    """
    if not math.isfinite(v_h):
        raise ValueError("v_h must be finite")
    sigma_f = math.sqrt(v_h) / (TAU * tau_min)
    sigma_b = sigma_f / conv.gamma_over_2pi
    return sigma_b * math.sqrt(total_time) * 1e9


@dataclass
class ScalingPoint:
    """One protocol at one sequence length, averaged over detunings."""

    kind: ProtocolKind
    n_steps: int
    g: int
    f: int
    t_sense: float
    t_wall: float
    v_h: float
    ci: tuple[float, float]
    eta2: float
    eta_field: float
    total_time: float  # the time used for eta2/eta_field (sensing or wall)
    estimates: np.ndarray | None = None  # (D, reps), kept for re-analysis


def _mean_vh_over_detunings(matrix: np.ndarray, tau_min: float) -> float:
    """Mean over detunings (rows) of the per-row ensemble Holevo variance."""
    z = np.mean(np.exp(1j * TAU * matrix * tau_min), axis=1)
    r2 = z.real * z.real + z.imag * z.imag
    ok = r2 >= _DEGENERATE_RESULTANT * _DEGENERATE_RESULTANT
    with np.errstate(divide="ignore"):
        vh = np.where(ok, 1.0 / np.where(ok, r2, 1.0) - 1.0, np.inf)
    return float(np.mean(np.maximum(vh, 0.0)))


def _bootstrap_scaling_ci(
    matrix: np.ndarray,
    tau_min: float,
    resamples: int,
    confidence: float,
    seed: int,
) -> tuple[float, float]:
    """Resample repetitions within each detuning cell (the grid is a fixed
    design, not a random sample) and re-average."""
    rng = derived_rng(seed, 0x5CA1E)
    d, reps = matrix.shape
    stats = np.empty(resamples)
    for i in range(resamples):
        idx = rng.integers(0, reps, (d, reps))
        resampled = np.take_along_axis(matrix, idx, axis=1)
        stats[i] = _mean_vh_over_detunings(resampled, tau_min)
    alpha = 0.5 * (1.0 - confidence)
    finite = stats[np.isfinite(stats)]
    if finite.size == 0:
        return math.inf, math.inf
    return float(np.quantile(finite, alpha)), float(np.quantile(finite, 1.0 - alpha))


def sensitivity_scaling(
    kinds: Sequence[ProtocolKind | str],
    n_range: Iterable[int],
    g: int,
    f: int,
    model: MeasurementModel,
    detunings: Sequence[float],
    reps: int,
    seed: int,
    timing: TimingModel | None = None,
    increments_by_n: dict[int, PhaseIncrementTable] | None = None,
    zero_increments: bool = True,
    resamples: int = 300,
    confidence: float = 0.95,
    workers: int | None = None,
    keep_estimates: bool = True,
) -> list[ScalingPoint]:
    """eta^2 = V_H * T across sequence lengths for each protocol.

    With ``timing=None`` the time axis is sensing-only; otherwise eta uses
    the wall-clock total under that timing model. For the optimized
    protocol, per-N tables come from ``increments_by_n``; missing entries
    fall back to all-zero tables (the full-adaptive variant) when
    ``zero_increments`` is set, and are an error otherwise.
    """
    detunings = np.asarray(detunings, dtype=float)
    points: list[ScalingPoint] = []
    for kind in [ProtocolKind(k) for k in kinds]:
        for n in n_range:
            schedule = Schedule(n, g, f, model.tau_min)
            inc = None
            if kind is ProtocolKind.OPTIMIZED_ADAPTIVE:
                inc = (increments_by_n or {}).get(n)
                if inc is None:
                    if not zero_increments:
                        raise ValueError(f"no increment table supplied for N={n}")
                    inc = PhaseIncrementTable.zeros(schedule)
            matrix = estimate_matrix(
                kind, schedule, model, detunings, reps, seed,
                increments=inc, workers=workers,
            )
            v_h = _mean_vh_over_detunings(matrix, schedule.tau_min)
            ci = _bootstrap_scaling_ci(
                matrix, schedule.tau_min, resamples, confidence, seed + 1000 + n
            )
            t_sense = schedule.total_sensing_time
            t_wall = schedule_wall_time(schedule, timing or TimingModel()).total
            t_used = t_sense if timing is None else t_wall
            eta2 = v_h * t_used
            eta_b = field_sensitivity(v_h, t_used, schedule.tau_min) if math.isfinite(v_h) else math.inf
            points.append(
                ScalingPoint(
                    kind=kind,
                    n_steps=n,
                    g=g,
                    f=f,
                    t_sense=t_sense,
                    t_wall=t_wall,
                    v_h=v_h,
                    ci=ci,
                    eta2=eta2,
                    eta_field=eta_b,
                    total_time=t_used,
                    estimates=matrix if keep_estimates else None,
                )
            )
    return points


def fit_loglog_slope(
    points: Sequence[ScalingPoint],
    t2_star: float | None = None,
    n_min: int = 4,
) -> float:
    """Least-squares slope of log(eta^2) against log(T).

    Restricted to N >= n_min (the early points are a transient) and, when
    ``t2_star`` is given, to total sensing times below t2_star/2 where
    dephasing has not yet saturated the scaling.
    """
    xs, ys = [], []
    for p in points:
        if p.n_steps < n_min:
            continue
        if t2_star is not None and p.t_sense >= 0.5 * t2_star:
            continue
        if not (math.isfinite(p.eta2) and p.eta2 > 0):
            continue
        xs.append(math.log(p.total_time))
        ys.append(math.log(p.eta2))
    if len(xs) < 2:
        raise ValueError("need at least two usable points to fit a slope")
    slope, _intercept = np.polyfit(xs, ys, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# room-temperature readout model

def rt_contrast(alpha0: float, alpha1: float, repetitions: int) -> float:
    """Readout contrast after averaging ``repetitions`` luminescence shots:
    1/C = sqrt(1 + 2*(a0+a1) / ((a0-a1)^2 * R))."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if alpha0 == alpha1:
        raise ValueError("alpha0 == alpha1 gives zero contrast at any repetition count")
    diff = alpha0 - alpha1
    inv_c = math.sqrt(1.0 + 2.0 * (alpha0 + alpha1) / (diff * diff * repetitions))
    return 1.0 / inv_c


@dataclass(frozen=True)
class RoomTempModel:
    """Room-temperature readout: photon rates, repetitions, derived fidelities."""

    repetitions: int
    alpha0: float = 0.031  # photons/shot in state 0
    alpha1: float = 0.021  # photons/shot in state 1
    f1: float = 0.993
    shot_duration: float = 1e-6

    @property
    def contrast(self) -> float:
        return rt_contrast(self.alpha0, self.alpha1, self.repetitions)

    @property
    def f0(self) -> float:
        return self.contrast + (1.0 - self.f1)

    def measurement_model(
        self, t2_star: float = 96e-6, tau_min: float = 20e-9
    ) -> MeasurementModel:
        return MeasurementModel(f0=self.f0, f1=self.f1, t2_star=t2_star, tau_min=tau_min)

    def timing_model(self) -> TimingModel:
        """Per-Ramsey overhead: R repeated shots of readout, no separate
        resonant initialization stage (it is part of each shot)."""
        return TimingModel(
            t_init=0.0,
            t_read=self.repetitions * self.shot_duration,
            compute_overlapped=True,
        )


def rt_model(repetitions: int, t2_star: float = 96e-6, tau_min: float = 20e-9) -> MeasurementModel:
    return RoomTempModel(repetitions).measurement_model(t2_star, tau_min)


@dataclass
class RtComparePoint:
    readout_reps: int
    contrast: float
    kind: ProtocolKind
    g: int
    f: int
    n_at_min: int
    t_wall: float
    v_h: float
    eta_field: float


def rt_compare(
    n_range: Iterable[int],
    g: int,
    f_values: Sequence[int],
    repetition_choices: Sequence[int],
    detunings: Sequence[float],
    reps: int,
    seed: int,
    t2_star: float = 96e-6,
    tau_min: float = 20e-9,
    workers: int | None = None,
) -> list[RtComparePoint]:
    """Best room-temperature sensitivity per (readout repetitions, F, protocol).

    Runs the optimized-adaptive (zero-increment) and non-adaptive protocols
    over the N family with wall-clock time including the per-shot readout
    overhead, and reports the minimum field sensitivity for each
    combination.
    """
    n_range = list(n_range)
    rows: list[RtComparePoint] = []
    for r_reps in repetition_choices:
        rt = RoomTempModel(int(r_reps))
        model = rt.measurement_model(t2_star, tau_min)
        timing = rt.timing_model()
        for f in f_values:
            points = sensitivity_scaling(
                [ProtocolKind.OPTIMIZED_ADAPTIVE, ProtocolKind.NON_ADAPTIVE],
                n_range,
                g,
                f,
                model,
                detunings,
                reps,
                seed,
                timing=timing,
                workers=workers,
                keep_estimates=False,
            )
            for kind in (ProtocolKind.OPTIMIZED_ADAPTIVE, ProtocolKind.NON_ADAPTIVE):
                mine = [p for p in points if p.kind is kind and math.isfinite(p.eta_field)]
                best = min(mine, key=lambda p: p.eta_field)
                rows.append(
                    RtComparePoint(
                        readout_reps=int(r_reps),
                        contrast=rt.contrast,
                        kind=kind,
                        g=g,
                        f=f,
                        n_at_min=best.n_steps,
                        t_wall=best.t_wall,
                        v_h=best.v_h,
                        eta_field=best.eta_field,
                    )
                )
    return rows


# ---------------------------------------------------------------------------
# result files

SCALING_COLUMNS = [
    "kind", "N", "G", "F", "T_sense_s", "T_wall_s",
    "V_H", "V_H_ci_lo", "V_H_ci_hi", "eta2", "eta_field_nT_sqrtHz", "seed",
]

SWEEP_COLUMNS = [
    "kind", "N", "G", "F", "detuning_hz",
    "V_H", "V_H_ci_lo", "V_H_ci_hi", "reps", "seed",
]

RT_COLUMNS = [
    "readout_reps", "contrast", "kind", "G", "F", "N_at_min",
    "T_wall_s", "V_H", "eta_field_nT_sqrtHz", "seed",
]


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_scaling_csv(path: str | Path, points: Sequence[ScalingPoint], seed: int) -> None:
    rows = sorted(points, key=lambda p: (p.kind.value, p.n_steps))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCALING_COLUMNS)
        for p in rows:
            writer.writerow(
                _fmt(v)
                for v in [
                    p.kind.value, p.n_steps, p.g, p.f, p.t_sense, p.t_wall,
                    p.v_h, p.ci[0], p.ci[1], p.eta2, p.eta_field, seed,
                ]
            )


def write_sweep_csv(
    path: str | Path,
    kind: ProtocolKind,
    schedule: Schedule,
    stats: Sequence[EnsembleStats],
    seed: int,
) -> None:
    rows = sorted(stats, key=lambda s: s.detuning)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for s in rows:
            writer.writerow(
                _fmt(v)
                for v in [
                    ProtocolKind(kind).value, schedule.n_steps, schedule.g, schedule.f,
                    s.detuning, s.holevo_variance, s.ci[0], s.ci[1],
                    len(s.estimates), seed,
                ]
            )


def write_rt_csv(path: str | Path, rows: Sequence[RtComparePoint], seed: int) -> None:
    ordered = sorted(rows, key=lambda r: (r.readout_reps, r.f, r.kind.value))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RT_COLUMNS)
        for r in ordered:
            writer.writerow(
                _fmt(v)
                for v in [
                    r.readout_reps, r.contrast, r.kind.value, r.g, r.f,
                    r.n_at_min, r.t_wall, r.v_h, r.eta_field, seed,
                ]
            )


def write_manifest(path: str | Path, payload: dict) -> None:
    doc = dict(payload)
    doc.setdefault("format", "adaptmag-manifest-v1")
    Path(path).write_text(json.dumps(doc, indent=2, default=_json_default))


def _json_default(obj):
    if isinstance(obj, ProtocolKind):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if dataclasses.is_dataclass(obj):
        return dataclasses.asdict(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")
