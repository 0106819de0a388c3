"""Small shared helpers: angle arithmetic and seeding.

All circular quantities in this package live on [-pi, pi). The wrapping
recipe below (fmod + sign fix) is used verbatim by both protocol backends
so that results are bit-identical across them.
"""

from __future__ import annotations

import math

import numpy as np

TAU = math.tau
INV_TAU = 1.0 / math.tau

# 8-bit phase resolution of the pulse generator (256 levels over 2*pi).
PHASE_LEVELS = 256
PHASE_STEP = TAU / PHASE_LEVELS


def wrap_angle(x: float) -> float:
    """Reduce an angle to [-pi, pi)."""
    y = math.fmod(x + math.pi, TAU)
    if y < 0.0:
        y += TAU
    return y - math.pi


def quantize_phase(x: float) -> float:
    """Round an angle in [-pi, pi) to the nearest of 256 levels.

    Uses floor(x/step + 0.5) rather than round() so the C and Python
    backends tie-break identically.
    """
    q = math.floor(x / PHASE_STEP + 0.5) * PHASE_STEP
    if q >= math.pi:
        q -= TAU
    return q


def derived_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Generator for one simulation cell, independent of execution order.

    The (master_seed, *key) tuple feeds a SeedSequence, so any worker can
    compute any cell and the ensemble is reproducible regardless of how
    work is distributed.
    """
    return np.random.default_rng(np.random.SeedSequence([master_seed, *key]))
