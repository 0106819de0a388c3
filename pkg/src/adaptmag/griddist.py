"""Dense grid representation of the phase posterior: the slow, obvious oracle.

Everything here applies Bayes' rule pointwise on a uniform grid over
[-pi, pi) with no Fourier bookkeeping. It exists to pin down conventions:
the sparse representation must agree with this one in distribution, and the
closed-form phase rule must agree with the numerical search
:func:`brute_force_phase`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDistributionError, DegenerateUpdateError
from .fourier import FourierDistribution, PhaseChoice
from .model import MeasurementModel, RamseySetting
from .util import TAU, wrap_angle

DEFAULT_GRID_SIZE = 1 << 16

# Quadrature rounding leaves O(M * eps) residue where a harmonic is truly
# zero; resultants below this are treated as degenerate (uniform-like).
DEGENERATE_RESULTANT = 1e-9


def grid_angles(grid_size: int) -> np.ndarray:
    """Uniform grid x_j = -pi + j * (2*pi/M), j = 0..M-1."""
    return -math.pi + TAU * np.arange(grid_size) / grid_size


@dataclass
class GridDistribution:
    """Normalized density samples on the uniform grid over [-pi, pi)."""

    values: np.ndarray = field(
        default_factory=lambda: np.full(DEFAULT_GRID_SIZE, 1.0 / TAU)
    )
    tau_min: float = 20e-9

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 4:
            raise ValueError("values must be a 1-d array of at least 4 points")
        if np.any(self.values < 0.0):
            raise ValueError("density values must be nonnegative")

    @classmethod
    def uniform(
        cls, grid_size: int = DEFAULT_GRID_SIZE, tau_min: float = 20e-9
    ) -> "GridDistribution":
        return cls(np.full(grid_size, 1.0 / TAU), tau_min)

    @property
    def grid_size(self) -> int:
        return self.values.size

    @property
    def angles(self) -> np.ndarray:
        return grid_angles(self.grid_size)

    @property
    def step(self) -> float:
        return TAU / self.grid_size

    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.step)

    def mean_resultant(self) -> complex:
        """<exp(i*x)> by quadrature (exact for band-limited densities)."""
        return complex(np.sum(self.values * np.exp(1j * self.angles)) * self.step)

    def circular_mean(self) -> float:
        z = self.mean_resultant()
        if abs(z) < DEGENERATE_RESULTANT:
            raise DegenerateDistributionError("distribution has (numerically) zero circular resultant")
        return math.atan2(z.imag, z.real)

    def harmonic(self, k: int) -> complex:
        """Fourier coefficient c_k = (1/2*pi) * integral P(x) exp(-i*k*x) dx."""
        phase = np.exp(-1j * k * self.angles)
        return complex(np.sum(self.values * phase) * self.step / TAU)

    def holevo_variance(self, k: int = 1) -> float:
        r = TAU * abs(self.harmonic(k))
        if r < DEGENERATE_RESULTANT:
            return math.inf
        return 1.0 / (r * r) - 1.0

    def estimate_frequency(self) -> float:
        return self.circular_mean() / (TAU * self.tau_min)


def grid_update(
    dist: GridDistribution,
    outcome: int,
    setting: RamseySetting,
    model: MeasurementModel,
) -> GridDistribution:
    """Pointwise Bayes update: multiply by the outcome likelihood, renormalize."""
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    tau = setting.tau(model.tau_min)
    envelope = model.visibility * model.damping(tau)
    phase = setting.t_units * dist.angles + setting.theta
    p0 = model.mean_level + envelope * np.cos(phase)
    like = p0 if outcome == 0 else 1.0 - p0
    post = dist.values * like
    mass = np.sum(post) * dist.step
    if not (mass > 0.0 and math.isfinite(mass)):
        raise DegenerateUpdateError(
            f"posterior mass vanished (mass={mass!r}) for outcome {outcome}"
        )
    return GridDistribution(post / mass, dist.tau_min)


def total_variation_distance(grid: GridDistribution, dist: FourierDistribution) -> float:
    """TV distance between the grid density and a reconstructed Fourier density."""
    recon = dist.density_on_grid(grid.grid_size)
    return 0.5 * float(np.sum(np.abs(recon - grid.values)) * grid.step)


def _branch_moments(
    dist: FourierDistribution,
    t: int,
    model: MeasurementModel,
    theta: np.ndarray,
    outcome: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized posterior (c'_0, |c'_t|) after one Ramsey, per theta.

    The update recurrence makes both depend only on the prior coefficients
    c_0, c_t and c_2t, so they can be evaluated for a whole array of
    candidate phases at once.
    """
    c0 = dist.coefficient(0)
    ct = dist.coefficient(t)
    c2t = dist.coefficient(2 * t)
    a_mu = model.mean_level if outcome == 0 else 1.0 - model.mean_level
    damp = model.damping(t * model.tau_min)
    b = 0.5 * model.visibility * damp
    w = b * np.exp(1j * (theta + (math.pi if outcome else 0.0)))
    wc = np.conjugate(w)
    new_c0 = (a_mu * c0 + w * np.conjugate(ct) + wc * ct).real
    new_ct = a_mu * ct + w * c0 + wc * c2t
    return new_c0, np.abs(new_ct)


def expected_holevo_after(
    dist: FourierDistribution, next_t_units: int, model: MeasurementModel, theta
):
    """Outcome-averaged posterior Holevo variance at harmonic ``next_t_units``.

    For each candidate phase: sum over outcomes of P(outcome) times the
    post-update Holevo variance measured at the scale of the upcoming
    sensing time. Vectorized over ``theta``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    total = np.zeros_like(theta)
    for mu in (0, 1):
        m0, mt = _branch_moments(dist, next_t_units, model, theta, mu)
        prob = TAU * m0
        with np.errstate(divide="ignore"):
            vh = np.where(mt > 0.0, (m0 / np.where(mt > 0.0, mt, 1.0)) ** 2 - 1.0, np.inf)
        total += np.where(prob > 0.0, prob * vh, 0.0)
    return total


def expected_sharpness_after(
    dist: FourierDistribution, next_t_units: int, model: MeasurementModel, theta
):
    """Outcome-averaged |c_t| of the normalized posterior (P-weighted).

    The probability weights cancel the renormalization, leaving
    sum_mu |c'_t(mu)| over the unnormalized branches.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    total = np.zeros_like(theta)
    for mu in (0, 1):
        _, mt = _branch_moments(dist, next_t_units, model, theta, mu)
        total += TAU * mt
    return total


def brute_force_phase(
    dist: FourierDistribution,
    next_t_units: int,
    model: MeasurementModel,
    grid_points: int = 4096,
    refine_iters: int = 60,
) -> PhaseChoice:
    """Numerically search the readout phase minimizing the expected variance.

    Scans ``grid_points`` phases over [-pi, pi) and refines the best bracket
    by golden-section search. Flags the degenerate case where the objective
    is flat (uniform or fully symmetric posterior). This is the oracle the
    closed-form :func:`adaptmag.fourier.controlled_phase` is validated
    against; it shares the update algebra but not the phase rule.
    """
    thetas = -math.pi + TAU * np.arange(grid_points) / grid_points
    obj = expected_holevo_after(dist, next_t_units, model, thetas)
    finite = np.isfinite(obj)
    if not np.any(finite):
        return PhaseChoice(0.0, True)
    spread = np.nanmax(obj[finite]) - np.nanmin(obj[finite])
    scale = max(abs(float(np.nanmin(obj[finite]))), 1.0)
    if not np.any(~finite) and spread <= 1e-14 * scale:
        return PhaseChoice(0.0, True)

    best = int(np.nanargmin(np.where(finite, obj, np.inf)))
    step = TAU / grid_points
    lo = thetas[best] - step
    hi = thetas[best] + step

    def f(x: float) -> float:
        return float(expected_holevo_after(dist, next_t_units, model, x)[0])

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(refine_iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return PhaseChoice(wrap_angle(0.5 * (a + b)), False)
