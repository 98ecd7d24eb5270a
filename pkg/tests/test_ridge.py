import numpy as np
import pytest

from oracles import best_joint_pair, best_single_path
from conftest import random_tfr

from waveridge import ridge, tfa
from waveridge.errors import (
    DegenerateInputError,
    InfeasibleRidgeError,
    InvalidParameterError,
)
from waveridge.ridge import PenaltyConfig, Ridge, RidgeSet, SegmentPlan


def single_plan(n):
    return SegmentPlan(np.array([0, n]), np.array([1]))


class TestNormalize:
    def test_single_nonzero_entry(self):
        vals = np.zeros((2, 3), complex)
        vals[1, 2] = 1.0
        out = ridge.normalize_tfr(tfa.Tfr(values=vals, dt=1, dxi=1, kind="stft"))
        assert out[1, 2] == 0.0
        floor = np.log(np.finfo(float).eps)
        mask = np.ones((2, 3), bool)
        mask[1, 2] = False
        assert np.all(out[mask] == floor)

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        vals = rng.normal(size=(4, 5)) + 1j * rng.normal(size=(4, 5))
        t1 = tfa.Tfr(values=vals, dt=1, dxi=1, kind="stft")
        t2 = tfa.Tfr(values=3.7 * vals, dt=1, dxi=1, kind="stft")
        assert np.allclose(ridge.normalize_tfr(t1), ridge.normalize_tfr(t2), rtol=1e-12)

    def test_uniform_two_by_two(self):
        vals = np.ones((2, 2), complex)
        out = ridge.normalize_tfr(tfa.Tfr(values=vals, dt=1, dxi=1, kind="stft"))
        assert np.allclose(out, np.log(0.25), rtol=1e-14)

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateInputError):
            ridge.normalize_tfr(tfa.Tfr(values=np.zeros((2, 2), complex), dt=1, dxi=1, kind="stft"))


class TestSingleRd:
    def test_zero_penalty_is_per_frame_argmax(self):
        rng = np.random.default_rng(5)
        tfr = random_tfr(rng, 6, 7)
        r = ridge.single_rd(tfr, 0.0)
        node = ridge.normalize_tfr(tfr)
        assert np.array_equal(r.bins - 1, np.argmax(node, axis=1))

    def test_tie_breaks_to_lower_bin(self):
        vals = np.array([[1.0, 3.0, 3.0], [2.0, 2.0, 0.5]])
        tfr = tfa.Tfr(values=vals.astype(complex), dt=1, dxi=1, kind="stft")
        r = ridge.single_rd(tfr, 0.0)
        assert list(r.bins) == [2, 1]

    def test_worked_small_instance(self):
        # rows (0,5,0)/(0,0,6) with a huge jump penalty: flat-at-2 scores 5,
        # jumping scores 5+6-10=1, flat-at-3 scores 6 and wins
        node = np.array([[0.0, 5.0, 0.0], [0.0, 0.0, 6.0]])
        from waveridge import _trellis

        lo = np.zeros(2, np.int64)
        hi = np.full(2, 2, np.int64)
        path, obj = _trellis.solve_single(node, 10.0, lo, hi, 3, -1)
        assert list(path + 1) == [3, 3]
        assert obj == 6.0

    @pytest.mark.parametrize("lam", [0.0, 0.5, 5.0])
    def test_matches_brute_force(self, lam):
        rng = np.random.default_rng(int(lam * 10) + 1)
        for _ in range(25):
            T = int(rng.integers(2, 7))
            M = int(rng.integers(2, 9))
            tfr = random_tfr(rng, T, M)
            r = ridge.single_rd(tfr, lam)
            node = ridge.normalize_tfr(tfr)
            got = ridge.path_objective(node, r.bins - 1, lam)
            want, _ = best_single_path(node, lam)
            assert got == want

    def test_smoothness_monotone_in_penalty(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            tfr = random_tfr(rng, 8, 10)
            r_small = ridge.single_rd(tfr, 0.2)
            r_big = ridge.single_rd(tfr, 2.0)
            wiggle = lambda r: np.sum(np.diff(r.bins.astype(float)) ** 2)
            assert wiggle(r_big) <= wiggle(r_small)

    def test_deterministic(self):
        rng = np.random.default_rng(12)
        tfr = random_tfr(rng, 10, 9)
        a = ridge.single_rd(tfr, 0.7)
        b = ridge.single_rd(tfr, 0.7)
        assert np.array_equal(a.bins, b.bins)


class TestMask:
    def test_zero_band_masks_exactly_ridge(self):
        rng = np.random.default_rng(2)
        tfr = random_tfr(rng, 5, 8)
        r = Ridge(bins=rng.integers(1, 9, size=5), dt=tfr.dt, dxi=tfr.dxi)
        masked = ridge.mask_tfr(tfr, r, 0, 0)
        for t in range(5):
            assert masked.values[t, r.bins[t] - 1] == 0
            others = np.delete(np.arange(8), r.bins[t] - 1)
            assert np.array_equal(masked.values[t, others], tfr.values[t, others])

    def test_wide_upper_band(self):
        rng = np.random.default_rng(3)
        tfr = random_tfr(rng, 4, 8)
        r = Ridge(bins=np.array([3, 4, 5, 6]), dt=tfr.dt, dxi=tfr.dxi)
        masked = ridge.mask_tfr(tfr, r, 1, 8)
        for t in range(4):
            lo = max(1, r.bins[t] - 1)
            assert not np.any(masked.values[t, lo - 1 :])
            assert np.array_equal(masked.values[t, : lo - 1], tfr.values[t, : lo - 1])

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        tfr = random_tfr(rng, 6, 9)
        r = Ridge(bins=rng.integers(1, 10, size=6), dt=tfr.dt, dxi=tfr.dxi)
        once = ridge.mask_tfr(tfr, r, 1, 2)
        twice = ridge.mask_tfr(once, r, 1, 2)
        assert np.array_equal(once.values, twice.values)


class TestMhrd:
    def test_k1_equals_single_rd(self):
        rng = np.random.default_rng(6)
        for lam in (0.0, 0.5, 5.0):
            tfr = random_tfr(rng, 5, 7)
            r1 = ridge.single_rd(tfr, lam, magnitude_power=1)
            rs = ridge.mhrd(
                tfr, 1, PenaltyConfig(lam=[lam]), 0.2,
                plan=single_plan(5), magnitude_power=1,
            )
            assert np.array_equal(rs.rows[0], r1.bins)

    @pytest.mark.parametrize("beta", [0.25, 0.4])
    def test_matches_feasible_brute_force(self, beta):
        rng = np.random.default_rng(int(beta * 100))
        for _ in range(12):
            T = int(rng.integers(2, 5))
            M = int(rng.integers(6, 13))
            lam = np.array(rng.choice([0.0, 0.5, 5.0], size=2))
            tfr = random_tfr(rng, T, M)
            rs = ridge.mhrd(tfr, 2, PenaltyConfig(lam=lam), beta, plan=single_plan(T))
            node = ridge.normalize_tfr(tfr, 2)
            got = ridge.ridgeset_objective(node, rs.rows - 1, lam)
            want, _ = best_joint_pair(node, lam, beta)
            assert got == want
            assert rs.objective == want

    def test_three_harmonic_tone_rows_on_truth(self, harmonic3_signal):
        sig, window, f1 = harmonic3_signal
        S = tfa.sst2(sig, window, 1000, hop=5)
        penalties = PenaltyConfig(lam=[1.0, 0.95, 0.9])
        rset = ridge.mhrd(S, 3, penalties, 1 / 16, delta_max=4)
        k = window.half_length // 5
        sel = slice(k, rset.n_times - k)
        for h in (1, 2, 3):
            bins = rset.rows[h - 1][sel]
            m_true = round(h * f1 / S.dxi)
            assert np.all(np.abs(bins - m_true) <= 1)

    def test_feasibility_invariant_holds(self):
        rng = np.random.default_rng(8)
        tfr = random_tfr(rng, 6, 20)
        rset = ridge.mhrd(tfr, 3, PenaltyConfig(lam=[0.5, 0.5, 0.5]), 0.3,
                          plan=single_plan(6))
        fund = rset.rows[0]
        for k in range(3):
            assert np.all(np.abs(rset.rows[k] - (k + 1) * fund) <= 0.3 * fund)

    def test_segment_continuity(self):
        rng = np.random.default_rng(9)
        tfr = random_tfr(rng, 12, 16)
        plan = SegmentPlan(np.array([0, 4, 8, 12]), np.array([3, 3, 3]))
        rset = ridge.mhrd(tfr, 2, PenaltyConfig(lam=[0.5, 0.5]), 0.3, plan=plan)
        # the first frame of each later segment is pinned to the previous end
        for boundary in (4, 8):
            assert np.array_equal(rset.rows[:, boundary], rset.rows[:, boundary - 1])

    def test_infeasible_band_raises_with_location(self):
        vals = np.ones((3, 8), complex)
        tfr = tfa.Tfr(values=vals, dt=1, dxi=1, kind="stft")
        # K=3 with beta=0 needs 3v <= 8, impossible for v >= 3; restricting
        # the fundamental above that leaves nothing feasible
        with pytest.raises(InfeasibleRidgeError) as err:
            ridge.mhrd(tfr, 3, PenaltyConfig(lam=[0.1] * 3), 0.0,
                       plan=single_plan(3), fundamental_range_hz=(4.0, 8.0))
        assert err.value.time_index == 1
        assert err.value.harmonic >= 2

    def test_beta_range_validated(self):
        rng = np.random.default_rng(10)
        tfr = random_tfr(rng, 3, 6)
        with pytest.raises(InvalidParameterError):
            ridge.mhrd(tfr, 2, PenaltyConfig(lam=[1, 1]), 0.5, plan=single_plan(3))

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        tfr = random_tfr(rng, 8, 14)
        kw = dict(n_harmonics=2, penalties=PenaltyConfig(lam=[0.5, 0.4]),
                  beta=0.3, plan=single_plan(8))
        a = ridge.mhrd(tfr, **kw)
        b = ridge.mhrd(tfr, **kw)
        assert np.array_equal(a.rows, b.rows)
        assert a.objective == b.objective


class TestModifiedSingleRd:
    def test_huge_mu_clips_to_harmonic(self):
        rng = np.random.default_rng(14)
        tfr = random_tfr(rng, 4, 6)
        c1 = Ridge(bins=np.array([2, 3, 4, 5]), dt=tfr.dt, dxi=tfr.dxi)
        r = ridge.modified_single_rd(tfr, c1, 2, 1.0, 1e12)
        assert np.array_equal(r.bins, np.clip(2 * c1.bins, 1, 6))

    def test_zero_mu_matches_single_rd(self):
        rng = np.random.default_rng(15)
        tfr = random_tfr(rng, 5, 7)
        c1 = Ridge(bins=np.ones(5, dtype=int), dt=tfr.dt, dxi=tfr.dxi)
        a = ridge.modified_single_rd(tfr, c1, 2, 0.8, 0.0)
        b = ridge.single_rd(tfr, 0.8)
        assert np.array_equal(a.bins, b.bins)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(16)
        for _ in range(30):
            T = int(rng.integers(2, 7))
            M = int(rng.integers(3, 9))
            tfr = random_tfr(rng, T, M)
            c1 = Ridge(bins=rng.integers(1, max(2, M // 2 + 1), size=T),
                       dt=tfr.dt, dxi=tfr.dxi)
            lam = float(rng.choice([0.0, 0.5, 5.0]))
            mu = float(rng.choice([0.0, 0.3, 2.0]))
            r = ridge.modified_single_rd(tfr, c1, 2, lam, mu)
            node = ridge.normalize_tfr(tfr, 1)
            bins_row = np.arange(1, M + 1, dtype=np.float64)
            node = node - mu * (bins_row[None, :] - (2 * c1.bins)[:, None].astype(float)) ** 2
            got = ridge.path_objective(node, r.bins - 1, lam)
            want, _ = best_single_path(node, lam)
            assert got == want


class TestMhrdConditioned:
    def test_beta_zero_pins_harmonics(self):
        rng = np.random.default_rng(17)
        tfr = random_tfr(rng, 5, 12)
        c1 = Ridge(bins=np.array([2, 2, 3, 3, 4]), dt=tfr.dt, dxi=tfr.dxi)
        rset = ridge.mhrd_conditioned(tfr, c1, 3, PenaltyConfig(lam=[1, 1, 1]), 0.0)
        assert np.array_equal(rset.rows[1], 2 * c1.bins)
        assert np.array_equal(rset.rows[2], 3 * c1.bins)

    def test_objective_is_sum_of_per_harmonic_optima(self):
        rng = np.random.default_rng(18)
        tfr = random_tfr(rng, 4, 12)
        c1 = Ridge(bins=np.array([2, 3, 3, 2]), dt=tfr.dt, dxi=tfr.dxi)
        pen = PenaltyConfig(lam=[0.5, 0.4, 0.3], mu=[0.0, 0.2, 0.1])
        rset = ridge.mhrd_conditioned(tfr, c1, 3, pen, 0.4)
        node = ridge.normalize_tfr(tfr, 1)
        total = 0.0
        for k in (2, 3):
            bins_row = np.arange(1, 13, dtype=float)
            nk = node - pen.mu[k - 1] * (bins_row[None, :] - (k * c1.bins)[:, None]) ** 2
            total += ridge.path_objective(nk, rset.rows[k - 1] - 1, pen.lam[k - 1])
        assert rset.objective == pytest.approx(total, rel=1e-12)

    def test_matches_banded_brute_force(self):
        from oracles import harmonic_band
        import itertools

        rng = np.random.default_rng(19)
        for _ in range(15):
            T = int(rng.integers(2, 5))
            M = int(rng.integers(6, 13))
            tfr = random_tfr(rng, T, M)
            c1 = Ridge(bins=rng.integers(2, max(3, M // 2), size=T),
                       dt=tfr.dt, dxi=tfr.dxi)
            lam, mu, beta = 0.5, 0.3, 0.4
            pen = PenaltyConfig(lam=[lam, lam], mu=[0.0, mu])
            try:
                rset = ridge.mhrd_conditioned(tfr, c1, 2, pen, beta)
            except InfeasibleRidgeError:
                continue
            node = ridge.normalize_tfr(tfr, 1)
            bins_row = np.arange(1, M + 1, dtype=float)
            node2 = node - mu * (bins_row[None, :] - (2 * c1.bins)[:, None]) ** 2
            got = ridge.path_objective(node2, rset.rows[1] - 1, lam)
            best = -np.inf
            bands = [range(*(lambda t: (t[0], t[1] + 1))(harmonic_band(2, v, beta, M)))
                     for v in c1.bins]
            for path in itertools.product(*bands):
                p = np.array(path) - 1
                val = ridge.path_objective(node2, p, lam)
                best = max(best, val)
            assert got == best

    def test_row_one_is_the_seed(self):
        rng = np.random.default_rng(20)
        tfr = random_tfr(rng, 4, 10)
        c1 = Ridge(bins=np.array([2, 2, 2, 2]), dt=tfr.dt, dxi=tfr.dxi)
        rset = ridge.mhrd_conditioned(tfr, c1, 2, PenaltyConfig(lam=[1, 1]), 0.3)
        assert np.array_equal(rset.rows[0], c1.bins)


class TestTypes:
    def test_ridgeset_validates_band(self):
        rows = np.array([[4, 4], [9, 9]])  # |9 - 8| = 1 > 0.125 * 4
        with pytest.raises(InvalidParameterError):
            RidgeSet(rows=rows, beta=0.125, dt=1.0, dxi=0.5)

    def test_segment_plan_validation(self):
        with pytest.raises(InvalidParameterError):
            SegmentPlan(np.array([0, 5, 5]), np.array([1, 1]))
        with pytest.raises(InvalidParameterError):
            SegmentPlan(np.array([1, 5]), np.array([1]))
        with pytest.raises(InvalidParameterError):
            SegmentPlan(np.array([0, 5]), np.array([0]))

    def test_penalty_validation(self):
        with pytest.raises(InvalidParameterError):
            PenaltyConfig(lam=[-1.0])
        with pytest.raises(InvalidParameterError):
            PenaltyConfig(lam=[1.0, 1.0], mu=[0.1])
