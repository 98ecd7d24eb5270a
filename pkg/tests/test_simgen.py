import numpy as np
import pytest

from waveridge import simgen
from waveridge.errors import DegenerateInputError, InvalidParameterError
from waveridge.ridge import Ridge


class TestSmoothedBrownian:
    def test_same_seed_identical(self):
        a = simgen.smoothed_brownian(10.0, 100.0, 1.0, 5)
        b = simgen.smoothed_brownian(10.0, 100.0, 1.0, 5)
        assert np.array_equal(a, b)

    def test_smoothing_contracts_variance(self):
        rng = np.random.default_rng(0)
        raw = np.cumsum(rng.normal(0, 0.1, size=2000))
        light = simgen.smoothed_brownian(20.0, 100.0, 0.05, 7)
        heavy = simgen.smoothed_brownian(20.0, 100.0, 10.0, 7)
        assert heavy.var() <= light.var()

    def test_raw_increment_statistics(self):
        fs = 200.0
        means, variances = [], []
        for seed in range(10):
            rng = np.random.default_rng(seed)
            n = int(50 * fs)
            raw = np.cumsum(rng.normal(0.0, np.sqrt(1.0 / fs), size=n))
            inc = np.diff(raw)
            means.append(inc.mean())
            variances.append(inc.var())
        assert abs(np.mean(means)) < 0.001
        assert abs(np.mean(variances) - 1.0 / fs) < 0.1 / fs


class TestGenY1:
    def test_noise_free_equals_clean(self):
        y, truth = simgen.gen_y1(0.5, None, seed=1)
        assert np.array_equal(y.samples, truth.clean.samples)
        assert truth.sigma == 0.0

    def test_snr_achieved_exactly(self):
        y, truth = simgen.gen_y1(0.3, 5.0, seed=2)
        noise = y.samples - truth.clean.samples
        realized = 20 * np.log10(np.std(truth.clean.samples) / np.std(noise))
        assert realized == pytest.approx(5.0, abs=1e-9)

    def test_clean_is_sum_of_harmonics(self):
        _, truth = simgen.gen_y1(0.4, None, seed=3)
        recomposed = (truth.amps * np.cos(2 * np.pi * truth.phases)).sum(axis=0)
        assert np.array_equal(truth.clean.samples, recomposed)

    def test_harmonic_relation_without_jitter(self):
        _, truth = simgen.gen_y1(0.5, None, seed=4, wsf_jitter_var=0.0)
        t = truth.clean.times
        for ell in (2, 3):
            d_ell = np.gradient(truth.phases[ell - 1], t)
            d_1 = np.gradient(truth.phases[0], t)
            ratio = d_ell / d_1
            assert np.all(ratio >= ell - 0.05)
            assert np.all(ratio <= ell + 0.05)

    def test_grid_dimensions(self):
        y, truth = simgen.gen_y1(0.5, None, seed=5)
        assert y.fs == 200.0
        assert y.n == 10000
        assert truth.if_fundamental.shape == (10000,)

    def test_seed_determinism(self):
        y1, t1 = simgen.gen_y1(0.2, 5.0, seed=6)
        y2, t2 = simgen.gen_y1(0.2, 5.0, seed=6)
        assert np.array_equal(y1.samples, y2.samples)
        assert np.array_equal(t1.if_fundamental, t2.if_fundamental)

    def test_amplitude_positivity_and_phase_monotonicity(self):
        for seed in (1, 2, 3):
            _, truth = simgen.gen_y1(0.5, None, seed=seed)
            assert np.all(truth.amps[0] > 0)
            assert np.all(np.diff(truth.phases[0]) > 0)
            assert truth.if_fundamental.min() > 0

    def test_d1_range_validated(self):
        with pytest.raises(InvalidParameterError):
            simgen.gen_y1(0.0, None, seed=1)
        with pytest.raises(InvalidParameterError):
            simgen.gen_y1(1.5, None, seed=1)


class TestGenY2:
    def test_noise_free_is_sum_of_components(self):
        y, (t1, t2) = simgen.gen_y2(0.5, 0.5, None, seed=12)
        assert np.allclose(
            y.samples, t1.clean.samples + t2.clean.samples, rtol=0, atol=0
        )

    def test_fundamentals_separated(self):
        _, (t1, t2) = simgen.gen_y2(0.5, 0.5, None, seed=12)
        assert np.min(t2.if_fundamental - t1.if_fundamental) > 0

    def test_seed_determinism(self):
        ya, _ = simgen.gen_y2(0.4, 0.6, 5.0, seed=16)
        yb, _ = simgen.gen_y2(0.4, 0.6, 5.0, seed=16)
        assert np.array_equal(ya.samples, yb.samples)

    def test_snr_against_component_sum(self):
        y, (t1, t2) = simgen.gen_y2(0.5, 0.5, 0.0, seed=12)
        clean = t1.clean.samples + t2.clean.samples
        noise = y.samples - clean
        realized = 20 * np.log10(np.std(clean) / np.std(noise))
        assert realized == pytest.approx(0.0, abs=1e-9)


class TestRelativeIfError:
    def test_exact_match_is_zero(self):
        r = Ridge(bins=np.array([10, 20, 30]), dt=0.1, dxi=0.5)
        assert simgen.relative_if_error(r.freqs_hz, r) == 0.0

    def test_ridge_on_double_truth_is_one(self):
        truth = np.array([5.0, 10.0, 15.0])
        doubled = Ridge(bins=np.array([20, 40, 60]), dt=0.1, dxi=0.5)
        assert simgen.relative_if_error(truth, doubled) == pytest.approx(1.0)

    def test_hand_case(self):
        r = Ridge(bins=np.array([3, 0 + 1]), dt=0.1, dxi=1.0)
        # truth (3, 4) vs ridge (3, 1): mismatch only in the second entry
        truth = np.array([3.0, 4.0])
        got = simgen.relative_if_error(truth, r)
        assert got == pytest.approx(3.0 / 5.0)

    def test_zero_truth_rejected(self):
        r = Ridge(bins=np.array([1, 1]), dt=0.1, dxi=0.5)
        with pytest.raises(DegenerateInputError):
            simgen.relative_if_error(np.zeros(2), r)

    def test_length_mismatch_rejected(self):
        r = Ridge(bins=np.array([1, 1]), dt=0.1, dxi=0.5)
        with pytest.raises(InvalidParameterError):
            simgen.relative_if_error(np.ones(3), r)


class TestBenchmark:
    def test_single_cell_noise_free(self):
        rows = simgen.run_benchmark("samd_mhrd", [0.5], [None], 1, seed=0)
        assert len(rows) == 1
        assert rows[0]["delta"] < 0.05

    def test_single_rd_metric_nonnegative(self):
        rows = simgen.run_benchmark("single_rd", [0.5], [None], 1, seed=0)
        assert len(rows) == 1
        assert np.isfinite(rows[0]["delta"])
        assert rows[0]["delta"] >= 0

    def test_csv_written(self, tmp_path):
        out = tmp_path / "bench.csv"
        simgen.run_benchmark("mhrd", [0.5], [None], 1, seed=0, out_csv=str(out))
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "detector,d1,snr_db,seed,delta"
        assert len(lines) == 2

    def test_unknown_detector_rejected(self):
        with pytest.raises(InvalidParameterError):
            simgen.detect_fundamental(
                simgen.gen_y1(0.5, None, seed=0)[0], "annealing"
            )
