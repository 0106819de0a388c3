"""Sparse Fourier representation of the phase posterior.

The posterior over the circular variable ``x = 2*pi*f_b*tau_min`` on
[-pi, pi) is written as

    P(x) = sum_k c_k * exp(i*k*x),          c_0 = 1/(2*pi),

and, because P is real, ``c_{-k} = conj(c_k)``; only indices k >= 0 are
stored. A Ramsey at ``t_units = t`` multiplies P by a likelihood whose only
harmonics are 0 and +-t, so a Bayesian update touches three coefficients
per index:

    c'_k = a_mu * c_k + w * c_{k-t} + conj(w) * c_{k+t}

with ``a_mu = (1 + (-1)^mu (f0 - f1))/2`` and
``w = exp(-(tau/t2_star)^2) * (f0 + f1 - 1)/4 * exp(i*(mu*pi + theta))``,
followed by renormalization to c_0 = 1/(2*pi).

Under this sign convention the circular mean of P is ``-arg(c_1)`` and the
Holevo variance is ``(2*pi*|c_1|)^-2 - 1``; both are pinned down by the
direct grid-space oracle in :mod:`adaptmag.griddist`, which the test suite
treats as ground truth.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DegenerateDistributionError, DegenerateUpdateError, TrimError
from .model import MeasurementModel, RamseySetting
from .util import INV_TAU, TAU, wrap_angle


class PhaseChoice(NamedTuple):
    """A selected readout phase plus a flag for the fully symmetric case."""

    theta: float
    degenerate: bool


@dataclass
class FourierDistribution:
    """Posterior density on [-pi, pi) stored as nonnegative-index harmonics."""

    coeffs: dict[int, complex] = field(default_factory=lambda: {0: INV_TAU + 0j})
    tau_min: float = 20e-9

    def __post_init__(self) -> None:
        if 0 not in self.coeffs:
            raise ValueError("coefficient k=0 is required")
        if any(k < 0 for k in self.coeffs):
            raise ValueError("only nonnegative harmonic indices are stored")

    @classmethod
    def uniform(cls, tau_min: float = 20e-9) -> "FourierDistribution":
        return cls({0: INV_TAU + 0j}, tau_min)

    @property
    def max_index(self) -> int:
        return max(self.coeffs)

    def coefficient(self, k: int) -> complex:
        """c_k for any integer k, using conjugate symmetry for k < 0."""
        if k >= 0:
            return self.coeffs.get(k, 0j)
        return self.coeffs.get(-k, 0j).conjugate()

    def density(self, x: np.ndarray) -> np.ndarray:
        """Reconstruct P(x) at the given angles (real part by symmetry)."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, INV_TAU)
        for k, c in self.coeffs.items():
            if k == 0:
                continue
            out += 2.0 * (c.real * np.cos(k * x) - c.imag * np.sin(k * x))
        return out

    def density_on_grid(self, grid_size: int) -> np.ndarray:
        """P at the uniform grid x_j = -pi + j*2*pi/M via an inverse FFT."""
        m = int(grid_size)
        if self.max_index >= m // 2:
            raise ValueError(f"grid of {m} points aliases harmonic {self.max_index}")
        spec = np.zeros(m, dtype=complex)
        for k, c in self.coeffs.items():
            sign = -1.0 if k % 2 else 1.0  # exp(-i*k*pi) factor for the -pi origin
            spec[k] += sign * c
            if k > 0:
                spec[-k] += sign * c.conjugate()
        return np.fft.ifft(spec).real * m

    def mean_resultant(self) -> complex:
        """<exp(i*x)> under P; equals 2*pi*conj(c_1)."""
        return TAU * self.coefficient(1).conjugate()

    def circular_mean(self) -> float:
        z = self.mean_resultant()
        if z == 0:
            raise DegenerateDistributionError("distribution has zero circular resultant")
        return math.atan2(z.imag, z.real)


def fourier_update(
    dist: FourierDistribution,
    outcome: int,
    setting: RamseySetting,
    model: MeasurementModel,
) -> FourierDistribution:
    """Bayesian update of the posterior for one Ramsey outcome.

    Returns a new distribution; the input is unchanged. Raises
    :class:`DegenerateUpdateError` when the outcome has zero probability
    under the current posterior (renormalization impossible).
    """
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome}")
    t = setting.t_units
    a_mu = dist_scale(model, outcome)
    w = update_shift_weight(model, outcome, setting)
    wc = w.conjugate()

    old = dist.coeffs
    new: dict[int, complex] = {}
    indices = set(old)
    indices.update(k + t for k in old)
    indices.update(abs(k - t) for k in old)
    for k in indices:
        c = a_mu * old.get(k, 0j)
        c += w * _signed(old, k - t)
        c += wc * _signed(old, k + t)
        if c != 0:
            new[k] = c

    c0 = new.get(0, 0j).real
    if not (c0 > 0.0 and math.isfinite(c0)):
        raise DegenerateUpdateError(
            f"posterior mass vanished (c0={c0!r}) for outcome {outcome} at t_units={t}"
        )
    norm = TAU * c0
    for k in list(new):
        new[k] /= norm
    new[0] = INV_TAU + 0j  # exact by construction; pin against rounding drift
    return FourierDistribution(new, dist.tau_min)


def dist_scale(model: MeasurementModel, outcome: int) -> float:
    """Likelihood DC term: (1 + (-1)^mu (f0 - f1)) / 2."""
    return model.mean_level if outcome == 0 else 1.0 - model.mean_level


def update_shift_weight(
    model: MeasurementModel, outcome: int, setting: RamseySetting
) -> complex:
    """Weight multiplying the +-t_units shifted coefficients in an update."""
    damp = model.damping(setting.tau(model.tau_min))
    chi = setting.theta + (math.pi if outcome else 0.0)
    return 0.5 * model.visibility * damp * cmath.exp(1j * chi)


def _signed(coeffs: dict[int, complex], k: int) -> complex:
    if k >= 0:
        return coeffs.get(k, 0j)
    return coeffs.get(-k, 0j).conjugate()


def posterior_holevo_variance(dist: FourierDistribution, k: int = 1) -> float:
    """Holevo variance (2*pi*|c_k|)^-2 - 1 of the posterior.

    ``k=1`` gives the variance of the estimation variable itself; passing
    the lowest populated harmonic instead measures sharpness at the scale
    of an ongoing estimation sequence. Returns +inf for a distribution with
    no k-th harmonic (e.g. uniform).
    """
    mag = abs(dist.coefficient(k))
    if mag == 0.0:
        return math.inf
    r = TAU * mag
    return 1.0 / (r * r) - 1.0


def controlled_phase(dist: FourierDistribution, next_t_units: int) -> PhaseChoice:
    """Readout phase for the next Ramsey at ``next_t_units``.

    Half the argument of the coefficient at index ``2*next_t_units``, the
    lowest harmonic populated before the sensing time halves; this choice
    maximizes the expected post-update sharpness at the new scale (checked
    against the numerical search in :func:`adaptmag.griddist.brute_force_phase`).
    Returns phase 0 with ``degenerate=True`` when that coefficient vanishes
    and every phase is equally informative.
    """
    if next_t_units < 1:
        raise ValueError(f"next_t_units must be >= 1, got {next_t_units}")
    c = dist.coefficient(2 * next_t_units)
    if c == 0:
        return PhaseChoice(0.0, True)
    return PhaseChoice(wrap_angle(0.5 * math.atan2(c.imag, c.real)), False)


def estimate_frequency(dist: FourierDistribution) -> float:
    """Circular-mean frequency estimate in hertz.

    The posterior mean of the periodic variable: arg<exp(i*x)> mapped back
    through x = 2*pi*f*tau_min. Raises when the resultant is zero.
    """
    return dist.circular_mean() / (TAU * dist.tau_min)


def trim_coefficients(
    dist: FourierDistribution,
    keep: int | Iterable[int],
    required: Iterable[int] | None = None,
) -> FourierDistribution:
    """Drop stored harmonics outside ``keep``.

    ``keep`` is either a maximum index (every stored k <= keep survives) or
    an explicit index set, which must contain 0. When ``required`` is given
    (the indices the remaining protocol still reads, see
    :func:`adaptmag.protocol.required_indices`), missing any of them is an
    error rather than a silent accuracy loss.
    """
    if isinstance(keep, int):
        keep_set = {k for k in dist.coeffs if k <= keep}
        if keep < 0:
            raise TrimError("keep budget must be >= 0")
    else:
        keep_set = set(keep)
    if 0 not in keep_set:
        raise TrimError("trim must keep the normalization coefficient k=0")
    if required is not None:
        missing = sorted(set(required) - keep_set)
        if missing:
            raise TrimError(f"trim drops indices still required by the protocol: {missing}")
    new = {k: c for k, c in dist.coeffs.items() if k in keep_set}
    if 0 not in new:
        new[0] = INV_TAU + 0j
    return FourierDistribution(new, dist.tau_min)
