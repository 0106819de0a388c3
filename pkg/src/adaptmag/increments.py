"""Outcome-conditioned phase-increment tables for the optimized protocol.

The table stores one increment per (stage n, rep m) and per value of the
previous outcome: ``u0[n][m]`` applies when the last outcome was 0,
``u1[n][m]`` when it was 1. Shapes are jagged because stage n runs
``M_n = g + f*(n-1)`` Ramseys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import MeasurementModel
from .schedule import Schedule
from .util import wrap_angle


@dataclass
class PhaseIncrementTable:
    """Jagged [stage][rep] increment tables, radians in [-pi, pi)."""

    u0: list[list[float]]
    u1: list[list[float]]

    def __post_init__(self) -> None:
        if len(self.u0) != len(self.u1):
            raise ValueError("u0 and u1 must cover the same number of stages")
        for n, (row0, row1) in enumerate(zip(self.u0, self.u1), start=1):
            if len(row0) != len(row1):
                raise ValueError(f"u0/u1 row lengths differ at stage {n}")
        self.u0 = [[wrap_angle(float(v)) for v in row] for row in self.u0]
        self.u1 = [[wrap_angle(float(v)) for v in row] for row in self.u1]

    @classmethod
    def zeros(cls, schedule: Schedule) -> "PhaseIncrementTable":
        """All-zero increments: reduces the optimized protocol to plain
        per-Ramsey controlled phases (the full-adaptive special case)."""
        u0 = [[0.0] * schedule.reps(n) for n in schedule.stages]
        return cls(u0, [row[:] for row in u0])

    @classmethod
    def from_vector(cls, vec: np.ndarray, schedule: Schedule) -> "PhaseIncrementTable":
        """Unflatten an optimizer position of length 2*R_N (u0 block then u1)."""
        r = schedule.total_ramseys
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (2 * r,):
            raise ValueError(f"expected vector of length {2 * r}, got {vec.shape}")
        u0, u1 = [], []
        pos = 0
        for n in schedule.stages:
            m = schedule.reps(n)
            u0.append([wrap_angle(v) for v in vec[pos : pos + m]])
            u1.append([wrap_angle(v) for v in vec[r + pos : r + pos + m]])
            pos += m
        return cls(u0, u1)

    def to_vector(self) -> np.ndarray:
        flat0 = [v for row in self.u0 for v in row]
        flat1 = [v for row in self.u1 for v in row]
        return np.array(flat0 + flat1, dtype=float)

    def increment(self, n: int, m: int, last_outcome: int) -> float:
        table = self.u0 if last_outcome == 0 else self.u1
        return table[n - 1][m - 1]

    def validate_for(self, schedule: Schedule) -> None:
        if len(self.u0) != schedule.n_steps:
            raise ValueError(
                f"increment table covers {len(self.u0)} stages, schedule needs {schedule.n_steps}"
            )
        for n in schedule.stages:
            if len(self.u0[n - 1]) != schedule.reps(n):
                raise ValueError(
                    f"stage {n} has {len(self.u0[n - 1])} increments, schedule needs {schedule.reps(n)}"
                )

    def flattened_for(self, schedule: Schedule) -> tuple[np.ndarray, np.ndarray]:
        """Per-step increment arrays aligned with ``schedule.steps()``."""
        self.validate_for(schedule)
        inc0 = np.array([self.u0[n - 1][m - 1] for n, m, _t in schedule.steps()])
        inc1 = np.array([self.u1[n - 1][m - 1] for n, m, _t in schedule.steps()])
        return inc0, inc1


def save_table(
    path: str | Path,
    table: PhaseIncrementTable,
    schedule: Schedule,
    model: MeasurementModel,
    objective: float,
    seed: int,
) -> None:
    """Write a trained table plus its training context as JSON."""
    doc = {
        "schedule": {"N": schedule.n_steps, "G": schedule.g, "F": schedule.f},
        "tau_min_s": schedule.tau_min,
        "model": {"f0": model.f0, "f1": model.f1, "t2_star_s": model.t2_star},
        "u0": table.u0,
        "u1": table.u1,
        "objective": objective,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_table(path: str | Path) -> tuple[PhaseIncrementTable, dict]:
    """Read a table written by :func:`save_table`; returns (table, metadata)."""
    doc = json.loads(Path(path).read_text())
    table = PhaseIncrementTable(doc["u0"], doc["u1"])
    meta = {k: doc[k] for k in doc if k not in ("u0", "u1")}
    return table, meta
