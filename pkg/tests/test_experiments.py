import csv
import json
import math

import numpy as np
import pytest

from adaptmag.experiments import (
    FieldConversion,
    RoomTempModel,
    SCALING_COLUMNS,
    SWEEP_COLUMNS,
    bootstrap_ci,
    detuning_grid,
    detuning_sweep,
    ensemble_holevo_variance,
    estimate_matrix,
    field_sensitivity,
    fit_loglog_slope,
    rt_contrast,
    sensitivity_scaling,
    write_manifest,
    write_scaling_csv,
    write_sweep_csv,
)
from adaptmag.model import MeasurementModel
from adaptmag.protocol import run_protocol
from adaptmag.schedule import Schedule, TimingModel

TAU_MIN = 20e-9


class TestEnsembleHolevo:
    def test_identical_estimates_give_zero(self):
        assert ensemble_holevo_variance([3e6] * 10, TAU_MIN) == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_spread_gives_infinity(self):
        # four phases at right angles: resultant exactly zero
        quarter = 0.25 / TAU_MIN  # f such that 2*pi*f*tau = pi/2
        est = [0.0, quarter, 2 * quarter, 3 * quarter]
        assert ensemble_holevo_variance(est, TAU_MIN) == math.inf

    def test_matches_distribution_oracle_at_half_resultant(self):
        # sample phases from P(x) = (1 + cos x)/(2*pi), whose Holevo
        # variance is 3; the ensemble statistic converges there
        rng = np.random.default_rng(8)
        xs = []
        while len(xs) < 40_000:
            x = rng.uniform(-np.pi, np.pi)
            if rng.random() < 0.5 * (1 + np.cos(x)):
                xs.append(x)
        est = np.array(xs) / (2 * np.pi * TAU_MIN)
        assert ensemble_holevo_variance(est, TAU_MIN) == pytest.approx(3.0, rel=0.1)

    def test_offset_invariance(self):
        rng = np.random.default_rng(9)
        est = rng.uniform(-20e6, 20e6, 200)
        base = ensemble_holevo_variance(est, TAU_MIN)
        shifted = ensemble_holevo_variance(est + 3.217e6, TAU_MIN)
        assert shifted == pytest.approx(base, rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ensemble_holevo_variance([], TAU_MIN)


class TestBootstrap:
    def test_constant_samples_degenerate_interval(self):
        lo, hi = bootstrap_ci([2.5] * 40, np.mean, resamples=200, seed=1)
        assert lo == hi == 2.5

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(4)
        data = rng.normal(size=60)
        a = bootstrap_ci(data, np.mean, resamples=300, seed=9)
        b = bootstrap_ci(data, np.mean, resamples=300, seed=9)
        assert a == b

    def test_requires_minimum_resamples(self):
        with pytest.raises(ValueError):
            bootstrap_ci([1.0, 2.0], np.mean, resamples=10)

    def test_coverage_of_the_mean(self):
        # ~95% of intervals should cover the true mean 0
        rng = np.random.default_rng(5)
        hits = 0
        n_trials = 120
        for trial in range(n_trials):
            data = rng.normal(size=50)
            lo, hi = bootstrap_ci(data, np.mean, resamples=400, confidence=0.95, seed=trial)
            hits += lo <= 0.0 <= hi
        assert 0.85 <= hits / n_trials <= 1.0

    def test_width_shrinks_with_sample_size(self):
        rng = np.random.default_rng(6)

        def width(n):
            data = rng.normal(size=n)
            lo, hi = bootstrap_ci(data, np.mean, resamples=400, seed=n)
            return hi - lo

        assert width(800) < width(50)


class TestFieldConversion:
    def test_zero_variance_gives_zero(self):
        assert field_sensitivity(0.0, 1e-3, TAU_MIN) == 0.0

    def test_double_time_scales_sqrt2(self):
        a = field_sensitivity(1e-6, 1e-3, TAU_MIN)
        b = field_sensitivity(1e-6, 2e-3, TAU_MIN)
        assert b == pytest.approx(a * math.sqrt(2), rel=1e-12)

    def test_conversion_chain(self):
        # V_H = 1, T = 1 s: sigma_f = 1/(2*pi*tau_min); eta in nT/sqrt(Hz)
        conv = FieldConversion()
        want = 1.0 / (2 * np.pi * TAU_MIN) / conv.gamma_over_2pi * 1e9
        assert field_sensitivity(1.0, 1.0, TAU_MIN, conv) == pytest.approx(want, rel=1e-12)

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            FieldConversion(gamma_over_2pi=-1.0)


class TestRoomTemperature:
    def test_published_contrast_values(self):
        assert rt_contrast(0.031, 0.021, 1350) == pytest.approx(0.75, abs=0.01)
        assert rt_contrast(0.031, 0.021, 3600) == pytest.approx(0.88, abs=0.01)
        assert rt_contrast(0.031, 0.021, 50000) >= 0.985

    def test_contrast_limit_is_one(self):
        assert rt_contrast(0.031, 0.021, 10**12) == pytest.approx(1.0, abs=1e-4)

    def test_equal_rates_rejected(self):
        with pytest.raises(ValueError):
            rt_contrast(0.02, 0.02, 100)

    def test_model_fidelities(self):
        rt = RoomTempModel(3600)
        assert rt.f1 == 0.993
        assert rt.f0 == pytest.approx(rt.contrast + 0.007, rel=1e-12)
        m = rt.measurement_model()
        assert isinstance(m, MeasurementModel)
        assert m.f0 == pytest.approx(rt.f0)

    def test_timing_includes_per_shot_overhead(self):
        rt = RoomTempModel(3600)
        t = rt.timing_model()
        assert t.t_read == pytest.approx(3600 * 1e-6, rel=1e-12)
        assert t.t_init == 0.0


class TestSweepAndScaling:
    def test_sweep_single_rep_degenerate_ci(self, paper_model):
        sched = Schedule(3, 2, 0, TAU_MIN)
        stats = detuning_sweep(
            "limited_adaptive", sched, paper_model, [1e6, 2e6], reps=1, seed=0, workers=1
        )
        for s in stats:
            assert s.ci[0] == s.ci[1] == s.holevo_variance

    def test_results_independent_of_worker_count(self, paper_model):
        sched = Schedule(4, 3, 1, TAU_MIN)
        grid = detuning_grid(6, TAU_MIN)
        a = estimate_matrix("limited_adaptive", sched, paper_model, grid, 4, seed=3, workers=1)
        b = estimate_matrix("limited_adaptive", sched, paper_model, grid, 4, seed=3, workers=2)
        assert np.array_equal(a, b)

    def test_n2_eigenstate_detunings_measured_exactly(self, ideal_model):
        # With theta = 0 start and ideal readout, the four outcome-eigenstate
        # detunings {0, -25, -12.5, +12.5} MHz are estimated exactly with
        # zero dispersion; anti-node detunings show large projection noise.
        sched = Schedule(2, 5, 7, TAU_MIN)
        special = [0.0, -25e6, -12.5e6, 12.5e6]
        stats = detuning_sweep(
            "limited_adaptive", sched, ideal_model, special + [6.25e6, 18.75e6],
            reps=101, seed=5, workers=1, resamples=120,
        )
        for s in stats[:4]:
            assert s.holevo_variance <= 1e-12
            err = np.angle(np.exp(1j * 2 * np.pi * (s.estimates - s.detuning) * TAU_MIN))
            assert np.max(np.abs(err)) < 1e-9
        for s in stats[4:]:
            assert s.holevo_variance > 0.1

    def test_scaling_point_fields(self, paper_model):
        pts = sensitivity_scaling(
            ["non_adaptive"], [3, 4], 3, 1, paper_model,
            detuning_grid(6, TAU_MIN), 5, seed=2, workers=1, resamples=120,
        )
        assert len(pts) == 2
        for p in pts:
            sched = Schedule(p.n_steps, 3, 1, TAU_MIN)
            assert p.t_sense == pytest.approx(sched.total_sensing_time, rel=1e-12)
            assert p.eta2 == pytest.approx(p.v_h * p.t_sense, rel=1e-12)
            assert p.ci[0] <= p.v_h <= p.ci[1] or math.isinf(p.v_h)

    def test_wall_mode_uses_wall_time(self, paper_model):
        pts = sensitivity_scaling(
            ["non_adaptive"], [3], 3, 1, paper_model,
            detuning_grid(4, TAU_MIN), 4, seed=2, timing=TimingModel(), workers=1,
            resamples=120,
        )
        p = pts[0]
        assert p.total_time == pytest.approx(p.t_wall, rel=1e-12)
        assert p.eta2 == pytest.approx(p.v_h * p.t_wall, rel=1e-12)

    def test_slope_fit_window(self):
        # synthetic points: eta2 = T^-1 inside the window
        pts = []
        for n in range(2, 9):
            sched = Schedule(n, 5, 2, TAU_MIN)
            t = sched.total_sensing_time
            pts.append(
                type("P", (), dict(n_steps=n, t_sense=t, total_time=t, eta2=1.0 / t))()
            )
        slope = fit_loglog_slope(pts, t2_star=None, n_min=4)
        assert slope == pytest.approx(-1.0, abs=1e-9)

    def test_sensitivity_saturates_at_coherence_limit(self):
        # eta^2 stops improving once the total sensing time passes T2*:
        # the minimum sits near the knee and the deep-saturation point is
        # measurably worse
        model = MeasurementModel(f0=0.88, f1=0.98, t2_star=5e-6)
        pts = sensitivity_scaling(
            ["limited_adaptive"], range(2, 11), 5, 2, model,
            detuning_grid(32, TAU_MIN), 25, seed=19, workers=1, resamples=120,
            keep_estimates=False,
        )
        best = min(pts, key=lambda p: p.eta2)
        assert best.t_sense <= 4 * 5e-6
        deep = next(p for p in pts if p.n_steps == 10)
        assert deep.t_sense > 20 * 5e-6
        assert deep.eta2 >= 2.0 * best.eta2

    def test_sweep_invariant_under_pi_phase_offset(self, paper_model):
        # adding pi to every swept phase only relabels the outcomes, so the
        # variance-vs-detuning curve is statistically unchanged (A/B check)
        sched = Schedule(3, 4, 2, TAU_MIN)
        grid = detuning_grid(12, TAU_MIN)

        def sweep(offset, seed):
            out = []
            for i, f_b in enumerate(grid):
                est = [
                    run_protocol(
                        "non_adaptive", sched, paper_model, float(f_b),
                        rng=10_000 * seed + 100 * i + r, phase_offset=offset,
                    ).f_estimate
                    for r in range(60)
                ]
                out.append(
                    (
                        ensemble_holevo_variance(est, TAU_MIN),
                        bootstrap_ci(
                            np.array(est),
                            lambda s: ensemble_holevo_variance(s, TAU_MIN),
                            resamples=200,
                            seed=i,
                        ),
                    )
                )
            return out

        a = sweep(0.0, 1)
        b = sweep(np.pi, 2)
        overlapping = sum(
            1
            for (_va, ca), (_vb, cb) in zip(a, b)
            if ca[0] <= cb[1] and cb[0] <= ca[1]
        )
        assert overlapping >= 9  # of 12 detunings

    def test_missing_increments_error(self, paper_model):
        with pytest.raises(ValueError, match="increment"):
            sensitivity_scaling(
                ["optimized_adaptive"], [3], 3, 1, paper_model,
                detuning_grid(4, TAU_MIN), 3, seed=1, zero_increments=False, workers=1,
            )


class TestCsvOutputs:
    def test_scaling_csv_schema_and_determinism(self, paper_model, tmp_path):
        pts = sensitivity_scaling(
            ["non_adaptive", "limited_adaptive"], [3, 4], 3, 1, paper_model,
            detuning_grid(5, TAU_MIN), 4, seed=6, workers=1, resamples=120,
        )
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_scaling_csv(p1, pts, seed=6)
        write_scaling_csv(p2, pts, seed=6)
        assert p1.read_bytes() == p2.read_bytes()
        rows = list(csv.reader(p1.open()))
        assert rows[0] == SCALING_COLUMNS
        assert len(rows) == 1 + len(pts)
        kinds = [r[0] for r in rows[1:]]
        assert kinds == sorted(kinds)  # stable sort order

    def test_sweep_csv_schema(self, paper_model, tmp_path):
        sched = Schedule(3, 2, 1, TAU_MIN)
        stats = detuning_sweep(
            "non_adaptive", sched, paper_model, [2e6, -1e6], reps=3, seed=1,
            workers=1, resamples=120,
        )
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, "non_adaptive", sched, stats, seed=1)
        rows = list(csv.reader(path.open()))
        assert rows[0] == SWEEP_COLUMNS
        dets = [float(r[4]) for r in rows[1:]]
        assert dets == sorted(dets)

    def test_csv_cells_are_plain_numbers(self, paper_model, tmp_path):
        # numpy scalars must not leak their repr into the files
        sched = Schedule(2, 2, 1, TAU_MIN)
        stats = detuning_sweep(
            "limited_adaptive", sched, paper_model, [0.0, 3e6], reps=4, seed=2,
            workers=1, resamples=120,
        )
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, "limited_adaptive", sched, stats, seed=2)
        text = path.read_text()
        assert "np.float64" not in text
        for row in list(csv.reader(path.open()))[1:]:
            for cell in row[4:8]:
                float(cell)  # parseable, including 'inf'

    def test_manifest_round_trip(self, tmp_path):
        path = tmp_path / "m.json"
        write_manifest(path, {"command": "test", "seed": 5, "grid": np.arange(3)})
        doc = json.loads(path.read_text())
        assert doc["format"] == "adaptmag-manifest-v1"
        assert doc["grid"] == [0, 1, 2]
