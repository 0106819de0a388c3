"""Command-line interface.

Subcommands: ``run`` (single trace, JSON), ``sweep`` (detuning sweep, CSV),
``scaling`` (sensitivity scaling, CSV), ``pso-train`` (swarm-optimized
increment table, JSON), ``rt-compare`` (room-temperature comparison, CSV),
``bench`` (compiled-vs-Python backend benchmark).

Configuration comes from an optional JSON file plus flags; flags win. Every
artifact is accompanied by a ``.manifest.json`` recording the fully resolved
configuration, so a run can be reproduced byte-for-byte from its outputs.
Progress goes to stderr; stdout carries one machine-readable JSON summary.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, backend
from .experiments import (
    detuning_grid,
    detuning_sweep,
    rt_compare,
    sensitivity_scaling,
    write_manifest,
    write_rt_csv,
    write_scaling_csv,
    write_sweep_csv,
)
from .increments import load_table, save_table
from .model import MeasurementModel
from .protocol import ProtocolKind, run_protocol
from .schedule import Schedule, TimingModel
from .swarm import SwarmConfig, train_increments

SEED_ENV_VAR = "RAMSEY_ADAPT_SEED"

_DEFAULTS = dict(
    protocol="limited_adaptive",
    protocols=["limited_adaptive", "non_adaptive", "optimized_adaptive"],
    n=10,
    n_range=None,  # e.g. "2..13"
    g=5,
    f=2,
    tau_min_ns=20.0,
    f0=0.88,
    f1=0.98,
    t2star_us=96.0,
    timing="none",  # "none" = sensing-only time axis, "wall" = with overhead
    t_init_us=150.0,
    t_read_us=10.0,
    detunings=64,
    f_true_hz=2e6,
    reps=25,
    resamples=300,
    confidence=0.95,
    seed=None,
    out="out",
    quantize_phase=False,
    increments=None,
    workers=None,
    backend=None,
    # pso-train
    particles=10,
    iterations=400,
    train_detunings=32,
    train_reps=25,
    # rt-compare
    rt_repetitions=[3600, 50000],
    rt_f_values=[2],
    rt_n_max=10,
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Fully resolved and validated invocation parameters."""

    values: dict

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def tau_min(self) -> float:
        return self.values["tau_min_ns"] * 1e-9

    @property
    def t2_star(self) -> float:
        us = self.values["t2star_us"]
        return math.inf if us in ("inf", math.inf) else float(us) * 1e-6

    def model(self) -> MeasurementModel:
        return MeasurementModel(
            f0=self.values["f0"], f1=self.values["f1"],
            t2_star=self.t2_star, tau_min=self.tau_min,
        )

    def timing_model(self) -> TimingModel | None:
        if self.values["timing"] == "none":
            return None
        return TimingModel(
            t_init=self.values["t_init_us"] * 1e-6,
            t_read=self.values["t_read_us"] * 1e-6,
        )

    def n_list(self) -> list[int]:
        spec = self.values["n_range"]
        if spec is None:
            return [self.values["n"]]
        lo, _, hi = str(spec).partition("..")
        try:
            lo_i, hi_i = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"n_range must look like '2..13', got {spec!r}") from None
        if not 1 <= lo_i <= hi_i:
            raise ConfigError(f"n_range must satisfy 1 <= lo <= hi, got {spec!r}")
        return list(range(lo_i, hi_i + 1))

    def grid(self) -> np.ndarray:
        return detuning_grid(self.values["detunings"], self.tau_min)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    """Merge defaults, a JSON config file, and CLI overrides (flags win)."""
    values = dict(_DEFAULTS)
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        unknown = sorted(set(doc) - set(_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(doc)
    values.update({k: v for k, v in overrides.items() if v is not None})
    if values["seed"] is None:
        env = os.environ.get(SEED_ENV_VAR)
        values["seed"] = int(env) if env is not None else 0
    _validate(values)
    cfg = RunConfig(values)
    cfg.n_list()  # force n_range validation before any work starts
    return cfg


def _validate(v: dict) -> None:
    def check(cond: bool, field: str, message: str):
        if not cond:
            raise ConfigError(f"{field}: {message} (got {v[field]!r})")

    check(0.0 <= v["f0"] <= 1.0, "f0", "must be in [0, 1]")
    check(0.0 <= v["f1"] <= 1.0, "f1", "must be in [0, 1]")
    check(v["tau_min_ns"] > 0, "tau_min_ns", "must be positive")
    check(
        v["t2star_us"] == "inf" or float(v["t2star_us"]) > 0,
        "t2star_us", "must be positive or 'inf'",
    )
    check(v["n"] >= 1, "n", "must be >= 1")
    check(v["g"] >= 1, "g", "must be >= 1")
    check(v["f"] >= 0, "f", "must be >= 0")
    check(v["reps"] >= 1, "reps", "must be >= 1")
    check(v["detunings"] >= 1, "detunings", "must be >= 1")
    check(v["timing"] in ("none", "wall"), "timing", "must be 'none' or 'wall'")
    check(0.0 < v["confidence"] < 1.0, "confidence", "must be in (0, 1)")
    kinds = {k.value for k in ProtocolKind}
    check(v["protocol"] in kinds, "protocol", f"must be one of {sorted(kinds)}")
    for p in v["protocols"]:
        if p not in kinds:
            raise ConfigError(f"protocols: unknown protocol {p!r}")
    if v["backend"] is not None:
        check(v["backend"] in ("cython", "python", "auto"), "backend", "must be cython/python/auto")
    tau_min = v["tau_min_ns"] * 1e-9
    check(abs(v["f_true_hz"]) < 0.5 / tau_min, "f_true_hz",
          f"must lie in the unambiguous range |f| < {0.5 / tau_min:.4g} Hz")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _load_increments(cfg: RunConfig):
    if cfg.values["increments"] is None:
        return None, None
    table, meta = load_table(cfg.values["increments"])
    return table, meta


def _emit(out_path: Path, cfg: RunConfig, command: str, outputs: list[str], extra: dict) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "backend": backend.active_backend_name(),
        "config": cfg.values,
        "outputs": outputs,
        **extra,
    }
    write_manifest(out_path, manifest)


def _summary(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _cmd_run(cfg: RunConfig, out_dir: Path) -> dict:
    sched = Schedule(cfg.n, cfg.g, cfg.f, cfg.tau_min)
    table, _meta = _load_increments(cfg)
    kind = ProtocolKind(cfg.protocol)
    if kind is ProtocolKind.OPTIMIZED_ADAPTIVE and table is None:
        raise ConfigError(
            "increments: optimized_adaptive requires an increment table "
            "(train one with the pso-train subcommand)"
        )
    trace = run_protocol(
        kind, sched, cfg.model(), cfg.f_true_hz, rng=cfg.seed,
        increments=table, phase_quantization=cfg.quantize_phase,
        keep_final=64, backend=cfg.values["backend"],
    )
    out = out_dir / "run_trace.json"
    trace.save(out, cfg.timing_model() or TimingModel())
    _emit(out_dir / "run_trace.manifest.json", cfg, "run", [out.name], {})
    return {
        "command": "run",
        "estimate_hz": trace.f_estimate,
        "f_true_hz": cfg.f_true_hz,
        "steps": trace.n_ramseys,
        "trace": str(out),
    }


def _cmd_sweep(cfg: RunConfig, out_dir: Path) -> dict:
    sched = Schedule(cfg.n, cfg.g, cfg.f, cfg.tau_min)
    table, _ = _load_increments(cfg)
    kind = ProtocolKind(cfg.protocol)
    if kind is ProtocolKind.OPTIMIZED_ADAPTIVE and table is None:
        raise ConfigError("increments: optimized_adaptive requires an increment table")
    _log(f"sweep: {kind.value} N={cfg.n} G={cfg.g} F={cfg.f} over {cfg.detunings} detunings x {cfg.reps} reps")
    stats = detuning_sweep(
        kind, sched, cfg.model(), cfg.grid(), cfg.reps, cfg.seed,
        increments=table, phase_quantization=cfg.quantize_phase,
        resamples=cfg.resamples, confidence=cfg.confidence, workers=cfg.workers,
    )
    out = out_dir / "sweep.csv"
    write_sweep_csv(out, kind, sched, stats, cfg.seed)
    _emit(out_dir / "sweep.manifest.json", cfg, "sweep", [out.name], {})
    finite = [s.holevo_variance for s in stats if math.isfinite(s.holevo_variance)]
    return {
        "command": "sweep",
        "csv": str(out),
        "points": len(stats),
        "min_V_H": min(finite) if finite else None,
    }


def _cmd_scaling(cfg: RunConfig, out_dir: Path) -> dict:
    kinds = [ProtocolKind(p) for p in cfg.protocols]
    table, meta = _load_increments(cfg)
    increments_by_n = None
    if table is not None and meta is not None:
        increments_by_n = {int(meta["schedule"]["N"]): table}
    n_list = cfg.n_list()
    _log(f"scaling: {[k.value for k in kinds]} N={n_list[0]}..{n_list[-1]} G={cfg.g} F={cfg.f}")
    points = sensitivity_scaling(
        kinds, n_list, cfg.g, cfg.f, cfg.model(), cfg.grid(), cfg.reps, cfg.seed,
        timing=cfg.timing_model(), increments_by_n=increments_by_n,
        resamples=cfg.resamples, confidence=cfg.confidence, workers=cfg.workers,
        keep_estimates=False,
    )
    out = out_dir / "scaling.csv"
    write_scaling_csv(out, points, cfg.seed)
    _emit(out_dir / "scaling.manifest.json", cfg, "scaling", [out.name], {})
    best = min((p for p in points if math.isfinite(p.eta_field)), key=lambda p: p.eta_field)
    return {
        "command": "scaling",
        "csv": str(out),
        "points": len(points),
        "best_eta_nT_sqrtHz": best.eta_field,
        "best_kind": best.kind.value,
        "best_N": best.n_steps,
    }


def _cmd_pso_train(cfg: RunConfig, out_dir: Path) -> dict:
    sched = Schedule(cfg.n, cfg.g, cfg.f, cfg.tau_min)
    swarm_cfg = SwarmConfig(particles=cfg.particles, iterations=cfg.iterations)
    grid = detuning_grid(cfg.train_detunings, cfg.tau_min)
    _log(
        f"pso-train: N={cfg.n} G={cfg.g} F={cfg.f}, dim={2 * sched.total_ramseys}, "
        f"{cfg.particles} particles x {cfg.iterations} iterations"
    )
    result = train_increments(
        sched, cfg.model(), grid, cfg.train_reps, cfg.seed, swarm_cfg
    )
    out = out_dir / "increments.json"
    save_table(out, result.table, sched, cfg.model(), result.objective, cfg.seed)
    _emit(
        out_dir / "increments.manifest.json", cfg, "pso-train", [out.name],
        {"objective": result.objective, "baseline": result.baseline,
         "history_first": result.history[0], "history_last": result.history[-1]},
    )
    return {
        "command": "pso-train",
        "table": str(out),
        "objective": result.objective,
        "baseline_zero_increment": result.baseline,
    }


def _cmd_rt_compare(cfg: RunConfig, out_dir: Path) -> dict:
    n_list = [n for n in (cfg.n_list() if cfg.values["n_range"] else range(2, cfg.rt_n_max + 1))]
    _log(f"rt-compare: R in {cfg.rt_repetitions}, F in {cfg.rt_f_values}, N={n_list[0]}..{n_list[-1]}")
    rows = rt_compare(
        n_list, cfg.g, cfg.rt_f_values, cfg.rt_repetitions,
        cfg.grid(), cfg.reps, cfg.seed,
        t2_star=cfg.t2_star, tau_min=cfg.tau_min, workers=cfg.workers,
    )
    out = out_dir / "rt_compare.csv"
    write_rt_csv(out, rows, cfg.seed)
    _emit(out_dir / "rt_compare.manifest.json", cfg, "rt-compare", [out.name], {})
    return {
        "command": "rt-compare",
        "csv": str(out),
        "rows": len(rows),
        "best_eta_nT_sqrtHz": min(r.eta_field for r in rows),
    }


def _cmd_bench(cfg: RunConfig, out_dir: Path) -> dict:
    sched = Schedule(cfg.n, cfg.g, cfg.f, cfg.tau_min)
    model = cfg.model()
    runs = 50

    def workload(backend_name: str) -> None:
        for s in range(runs):
            run_protocol(
                ProtocolKind(cfg.protocol), sched, model, cfg.f_true_hz,
                rng=cfg.seed + s, backend=backend_name,
            )

    times = backend.benchmark_backends(workload)
    doc = {
        "command": "bench",
        "runs": runs,
        "schedule": {"N": cfg.n, "G": cfg.g, "F": cfg.f},
        "seconds": times,
    }
    if "cython" in times and "python" in times:
        doc["speedup"] = times["python"] / times["cython"]
    out = out_dir / "bench.json"
    out.write_text(json.dumps(doc, indent=2))
    _emit(out_dir / "bench.manifest.json", cfg, "bench", [out.name], {})
    for name, sec in times.items():
        _log(f"  {name:7s} {sec * 1e3 / runs:8.3f} ms/run")
    return doc


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "scaling": _cmd_scaling,
    "pso-train": _cmd_pso_train,
    "rt-compare": _cmd_rt_compare,
    "bench": _cmd_bench,
}


def dispatch(cfg: RunConfig, command: str) -> int:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    summary = _COMMANDS[command](cfg, out_dir)
    _log(f"{command}: done in {time.perf_counter() - started:.2f}s")
    _summary(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptmag",
        description="Adaptive Bayesian Ramsey magnetometry simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "single estimation sequence, trace as JSON"),
        ("sweep", "Holevo variance vs detuning, CSV"),
        ("scaling", "sensitivity scaling over sequence lengths, CSV"),
        ("pso-train", "swarm-optimize a phase-increment table, JSON"),
        ("rt-compare", "room-temperature readout comparison, CSV"),
        ("bench", "benchmark compiled vs pure-Python backend"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--protocol", choices=[k.value for k in ProtocolKind])
        p.add_argument("--n", type=int, help="number of sensing times N")
        p.add_argument("--n-range", dest="n_range", help="inclusive range like 2..13")
        p.add_argument("--g", type=int, help="repetitions G at the longest sensing time")
        p.add_argument("--f", type=int, help="repetition increment F per stage")
        p.add_argument("--tau-min-ns", dest="tau_min_ns", type=float)
        p.add_argument("--f0", type=float, help="readout fidelity for outcome 0")
        p.add_argument("--f1", type=float, help="readout fidelity for outcome 1")
        p.add_argument("--t2star-us", dest="t2star_us", help="dephasing time in us, or 'inf'")
        p.add_argument("--timing", choices=["none", "wall"], help="time axis for eta")
        p.add_argument("--detunings", type=int, help="number of grid detunings")
        p.add_argument("--f-true-hz", dest="f_true_hz", type=float)
        p.add_argument("--reps", type=int, help="estimation repetitions per detuning")
        p.add_argument("--seed", type=int, help=f"master seed (fallback: ${SEED_ENV_VAR})")
        p.add_argument("--out", help="output directory")
        p.add_argument("--quantize-phase", dest="quantize_phase", action="store_const",
                       const=True, help="round applied phases to 8-bit resolution")
        p.add_argument("--increments", help="path to a trained increment table")
        p.add_argument("--workers", type=int, help="parallel workers (default: all cores)")
        p.add_argument("--backend", choices=["cython", "python", "auto"])
        if name == "pso-train":
            p.add_argument("--particles", type=int)
            p.add_argument("--iterations", type=int)
            p.add_argument("--train-detunings", dest="train_detunings", type=int)
            p.add_argument("--train-reps", dest="train_reps", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    try:
        cfg = load_config(config_path, args)
        return dispatch(cfg, command)
    except (ConfigError, ValueError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
