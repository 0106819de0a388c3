"""Sparse-Fourier posterior vs the dense grid oracle.

The grid representation applies Bayes' rule pointwise and is treated as
ground truth; every convention of the sparse representation (signs, phase
factors, normalization, estimator) must agree with it in distribution.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adaptmag.errors import (
    DegenerateDistributionError,
    DegenerateUpdateError,
    TrimError,
)
from adaptmag.fourier import (
    FourierDistribution,
    estimate_frequency,
    fourier_update,
    posterior_holevo_variance,
    trim_coefficients,
)
from adaptmag.griddist import GridDistribution, grid_update, total_variation_distance
from adaptmag.model import MeasurementModel, RamseySetting
from adaptmag.util import INV_TAU, TAU

from conftest import random_model

TAU_MIN = 20e-9


def apply_both(updates, model, grid_size=1 << 16):
    fd = FourierDistribution.uniform(TAU_MIN)
    gd = GridDistribution.uniform(grid_size, TAU_MIN)
    for outcome, setting in updates:
        fd = fourier_update(fd, outcome, setting, model)
        gd = grid_update(gd, outcome, setting, model)
    return fd, gd


class TestSingleUpdates:
    def test_uniform_prior_single_update_stores_two_coefficients(self, ideal_model):
        fd = fourier_update(
            FourierDistribution.uniform(TAU_MIN), 0, RamseySetting(4, 0.3), ideal_model
        )
        assert set(fd.coeffs) == {0, 4}

    def test_normalization_pinned_exactly(self, paper_model):
        fd = FourierDistribution.uniform(TAU_MIN)
        rng = np.random.default_rng(5)
        for _ in range(30):
            setting = RamseySetting(int(rng.integers(1, 64)), float(rng.uniform(-np.pi, np.pi)))
            fd = fourier_update(fd, int(rng.integers(0, 2)), setting, paper_model)
            assert fd.coeffs[0] == INV_TAU

    def test_fig2_posterior_zeros_and_maxima(self, ideal_model):
        # outcome 1 at t_units=4, theta=0: density (1 - cos 4x)/(2*pi);
        # zeros at f in {0, +-12.5, +-25} MHz, maxima at {+-6.25, +-18.75} MHz
        fd = fourier_update(
            FourierDistribution.uniform(TAU_MIN), 1, RamseySetting(4, 0.0), ideal_model
        )
        assert fd.coeffs[4] == pytest.approx(-1.0 / (4 * math.pi), abs=1e-15)
        f_mhz = np.array([0.0, 12.5, -12.5, 25.0 - 1e-9, 6.25, -6.25, 18.75, -18.75])
        x = TAU * f_mhz * 1e6 * TAU_MIN
        dens = fd.density(x)
        assert np.all(np.abs(dens[:4]) < 1e-12)
        assert dens[4:] == pytest.approx(np.full(4, 1.0 / math.pi), abs=1e-12)

    def test_grid_update_matches_fig2_structure(self, ideal_model):
        gd = grid_update(
            GridDistribution.uniform(1 << 12, TAU_MIN), 1, RamseySetting(4, 0.0), ideal_model
        )
        dens = gd.values
        angles = gd.angles
        # minima at multiples of pi/2 (f = 0, +-12.5, +-25 MHz)
        mins = np.isclose(np.mod(angles, math.pi / 2), 0.0, atol=1e-9)
        assert np.all(dens[mins] < 1e-12)
        # maxima at odd multiples of pi/4
        maxs = np.isclose(np.mod(angles + math.pi / 4, math.pi / 2), 0.0, atol=1e-9)
        assert dens[maxs] == pytest.approx(1.0 / math.pi, abs=1e-12)

    def test_flat_likelihood_leaves_grid_unchanged(self):
        # f0 + f1 = 1 makes the likelihood constant in f_B
        m = MeasurementModel(f0=0.3, f1=0.7, t2_star=math.inf, tau_min=TAU_MIN)
        gd = grid_update(
            GridDistribution.uniform(1 << 10, TAU_MIN), 0, RamseySetting(4, 0.7), m
        )
        gd = grid_update(gd, 1, RamseySetting(2, -0.2), m)
        assert gd.values == pytest.approx(np.full(1 << 10, 1.0 / TAU), rel=1e-12)

    def test_grid_updates_commute(self, paper_model):
        a = (0, RamseySetting(8, 0.9))
        b = (1, RamseySetting(2, -1.3))
        g1 = GridDistribution.uniform(1 << 10, TAU_MIN)
        g_ab = grid_update(grid_update(g1, *a, paper_model), *b, paper_model)
        g_ba = grid_update(grid_update(g1, *b, paper_model), *a, paper_model)
        assert g_ab.values == pytest.approx(g_ba.values, rel=1e-12, abs=1e-15)

    def test_annihilating_update_raises(self, ideal_model):
        # all grid mass sits exactly where the outcome-0 likelihood vanishes
        values = np.zeros(1 << 10)
        values[1 << 9] = 1.0  # x = 0 after the -pi origin: index M/2 is x = 0... pick x = pi
        gd = GridDistribution(values / (np.sum(values) * TAU / (1 << 10)), TAU_MIN)
        # mass at x = -pi: outcome 0 at theta=0, t=1 has likelihood (1+cos x)/2 = 0 there
        values2 = np.zeros(1 << 10)
        values2[0] = 1.0
        gd = GridDistribution(values2 / (np.sum(values2) * TAU / (1 << 10)), TAU_MIN)
        with pytest.raises(DegenerateUpdateError):
            grid_update(gd, 0, RamseySetting(1, 0.0), ideal_model)
        # Fourier: band-limited densities never annihilate exactly, so drive the
        # normalization c0 -> 0 with a crafted (unnormalizable) coefficient set
        fd = FourierDistribution({0: INV_TAU, 1: complex(-INV_TAU, 0.0)}, TAU_MIN)
        with pytest.raises(DegenerateUpdateError):
            fourier_update(fd, 0, RamseySetting(1, 0.0), ideal_model)


class TestOracleEquivalence:
    @settings(max_examples=60, deadline=None)
    @given(data=st.data())
    def test_random_sequences_match_grid(self, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
        model = random_model(rng)
        n_updates = int(rng.integers(1, 21))
        updates = []
        for _ in range(n_updates):
            t = 1 << int(rng.integers(0, 10))
            theta = float(rng.uniform(-np.pi, np.pi))
            updates.append((int(rng.integers(0, 2)), RamseySetting(t, theta)))
        try:
            fd, gd = apply_both(updates, model, grid_size=1 << 14)
        except DegenerateUpdateError:
            return  # forced an impossible outcome; nothing to compare
        assert fd.max_index < (1 << 14) // 2
        assert total_variation_distance(gd, fd) < 1e-6

    def test_conjugate_symmetry_reconstruction_real(self, paper_model):
        rng = np.random.default_rng(7)
        fd = FourierDistribution.uniform(TAU_MIN)
        for _ in range(15):
            fd = fourier_update(
                fd,
                int(rng.integers(0, 2)),
                RamseySetting(1 << int(rng.integers(0, 8)), float(rng.uniform(-3, 3))),
                paper_model,
            )
        # density_on_grid discards the imaginary part; recompute it explicitly
        m = 1 << 13
        spec = np.zeros(m, dtype=complex)
        for k, c in fd.coeffs.items():
            sign = -1.0 if k % 2 else 1.0
            spec[k] += sign * c
            if k > 0:
                spec[-k] += sign * c.conjugate()
        recon = np.fft.ifft(spec) * m
        assert np.max(np.abs(recon.imag)) < 1e-12

    def test_grid_mass_stays_normalized(self, paper_model):
        rng = np.random.default_rng(11)
        gd = GridDistribution.uniform(1 << 12, TAU_MIN)
        for _ in range(40):
            gd = grid_update(
                gd,
                int(rng.integers(0, 2)),
                RamseySetting(1 << int(rng.integers(0, 6)), float(rng.uniform(-3, 3))),
                paper_model,
            )
            assert gd.total_mass() == pytest.approx(1.0, abs=1e-12)

    def test_sharpness_gain_non_increasing_in_damping_ratio(self):
        # the informative terms carry exp(-(tau/T2*)^2): for a fixed prior,
        # outcome and setting, the first-harmonic gain |c1'|/|c1| cannot
        # grow as tau/T2* grows
        import math as _math

        prior = FourierDistribution(
            {0: INV_TAU, 1: 0.08 - 0.03j, 2: 0.02 + 0.01j}, TAU_MIN
        )
        setting = RamseySetting(1, 0.7)
        gains = []
        for t2 in (_math.inf, 500e-9, 100e-9, 40e-9, 20e-9, 10e-9):
            m = MeasurementModel(f0=0.88, f1=0.98, t2_star=t2, tau_min=TAU_MIN)
            post = fourier_update(prior, 0, setting, m)
            gains.append(abs(post.coeffs[1]) / abs(prior.coeffs[1]))
        assert all(a >= b - 1e-12 for a, b in zip(gains, gains[1:]))

    def test_coefficient_magnitudes_bounded(self, paper_model):
        rng = np.random.default_rng(13)
        fd = FourierDistribution.uniform(TAU_MIN)
        for _ in range(25):
            fd = fourier_update(
                fd,
                int(rng.integers(0, 2)),
                RamseySetting(1 << int(rng.integers(0, 6)), float(rng.uniform(-3, 3))),
                paper_model,
            )
        assert all(abs(c) <= INV_TAU + 1e-12 for c in fd.coeffs.values())


class TestHolevoVariance:
    def test_uniform_is_infinite(self):
        assert posterior_holevo_variance(FourierDistribution.uniform(TAU_MIN)) == math.inf
        assert GridDistribution.uniform(1 << 10, TAU_MIN).holevo_variance() == math.inf

    def test_half_resultant_density_gives_three(self):
        # P(x) = (1 + cos x)/(2*pi): |<e^{ix}>| = 1/2, V_H = 4 - 1 = 3.
        # Grid oracle first: quadrature of the analytic density.
        xs = np.linspace(-math.pi, math.pi, 1 << 12, endpoint=False)
        gd = GridDistribution((1 + np.cos(xs)) / TAU, TAU_MIN)
        assert gd.holevo_variance() == pytest.approx(3.0, abs=1e-9)
        fd = FourierDistribution({0: INV_TAU, 1: complex(1 / (2 * TAU), 0)}, TAU_MIN)
        assert posterior_holevo_variance(fd) == pytest.approx(3.0, abs=1e-12)

    def test_point_mass_limit_approaches_zero(self):
        # truncated delta: c_k = 1/(2*pi) for all |k| <= K
        big = FourierDistribution(
            {k: INV_TAU + 0j for k in range(0, 201)}, TAU_MIN
        )
        assert posterior_holevo_variance(big) == pytest.approx(0.0, abs=1e-12)

    def test_grid_and_fourier_agree_after_updates(self, paper_model):
        rng = np.random.default_rng(3)
        updates = [
            (int(rng.integers(0, 2)), RamseySetting(1 << int(rng.integers(0, 5)), float(rng.uniform(-3, 3))))
            for _ in range(12)
        ]
        fd, gd = apply_both(updates, paper_model, grid_size=1 << 13)
        assert posterior_holevo_variance(fd) == pytest.approx(
            gd.holevo_variance(), rel=1e-9
        )


class TestEstimator:
    def test_shifted_cosine_mean(self):
        for phi0 in (-2.0, -0.5, 0.0, 1.2, 3.0):
            c1 = complex(math.cos(-phi0), math.sin(-phi0)) / (2 * TAU)
            fd = FourierDistribution({0: INV_TAU, 1: c1}, TAU_MIN)
            want = phi0 / (TAU * TAU_MIN)
            assert estimate_frequency(fd) == pytest.approx(want, rel=1e-12, abs=1e-3)

    def test_matches_grid_estimator(self, paper_model):
        rng = np.random.default_rng(17)
        updates = [
            (int(rng.integers(0, 2)), RamseySetting(1 << int(rng.integers(0, 6)), float(rng.uniform(-3, 3))))
            for _ in range(10)
        ]
        fd, gd = apply_both(updates, paper_model, grid_size=1 << 13)
        assert estimate_frequency(fd) == pytest.approx(gd.estimate_frequency(), abs=1.0)

    def test_narrow_peak_at_2mhz(self, ideal_model):
        # concentrate the posterior near 2 MHz via many ideal updates
        f_true = 2e6
        fd = FourierDistribution.uniform(TAU_MIN)
        gd = GridDistribution.uniform(1 << 14, TAU_MIN)
        rng = np.random.default_rng(23)
        from adaptmag.model import outcome_likelihood

        for t in (16, 16, 8, 8, 4, 4, 2, 2, 1, 1):
            setting = RamseySetting(t, float(rng.uniform(-np.pi, np.pi)))
            p0 = outcome_likelihood(ideal_model, f_true, setting)
            outcome = 0 if rng.random() < p0 else 1
            fd = fourier_update(fd, outcome, setting, ideal_model)
            gd = grid_update(gd, outcome, setting, ideal_model)
        assert estimate_frequency(fd) == pytest.approx(f_true, abs=0.5e6)
        assert gd.estimate_frequency() == pytest.approx(f_true, abs=0.5e6)

    def test_uniform_distribution_raises(self):
        with pytest.raises(DegenerateDistributionError):
            estimate_frequency(FourierDistribution.uniform(TAU_MIN))


class TestTrim:
    def test_trim_must_keep_zero(self):
        fd = FourierDistribution({0: INV_TAU, 4: 0.01 + 0j}, TAU_MIN)
        with pytest.raises(TrimError):
            trim_coefficients(fd, {4})

    def test_trim_missing_required_raises(self):
        fd = FourierDistribution({0: INV_TAU, 2: 0.01 + 0j, 4: 0.01 + 0j}, TAU_MIN)
        with pytest.raises(TrimError):
            trim_coefficients(fd, {0, 4}, required={0, 2})

    def test_budget_trim_keeps_low_indices(self):
        fd = FourierDistribution(
            {0: INV_TAU, 2: 0.01 + 0j, 8: 0.02j, 64: 0.001 + 0j}, TAU_MIN
        )
        out = trim_coefficients(fd, 8)
        assert set(out.coeffs) == {0, 2, 8}

    def test_dropping_unused_coefficient_bitwise_safe(self, paper_model):
        # a coefficient that never feeds the estimator leaves it untouched
        fd = FourierDistribution.uniform(TAU_MIN)
        for outcome, setting in [(0, RamseySetting(8, 0.5)), (1, RamseySetting(8, 1.1))]:
            fd = fourier_update(fd, outcome, setting, paper_model)
        assert sorted(fd.coeffs) == [0, 8, 16]
        trimmed = trim_coefficients(fd, {0, 8})  # k=16 cannot reach k<=2 at t=1
        nxt = RamseySetting(1, -0.4)
        full_next = fourier_update(fd, 0, nxt, paper_model)
        trim_next = fourier_update(trimmed, 0, nxt, paper_model)
        for k in (0, 1):
            assert full_next.coeffs.get(k, 0j) == trim_next.coeffs.get(k, 0j)
        assert estimate_frequency(full_next) == estimate_frequency(trim_next)
