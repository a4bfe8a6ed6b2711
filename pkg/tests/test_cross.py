"""Tests of maxvol pivoting, matrix cross decomposition, the Taylor TT
exponential, and both elementwise cross variants against dense oracles."""

import itertools
import math

import numpy as np
import pytest

from ttinfer import (
    CrossConfig,
    DegenerateMatrixError,
    NonFiniteValueError,
    matrix_cross,
    maxvol,
    ones_tt,
    random_tt,
    tt_cross,
    tt_cross_sample,
    tt_cross_sweep,
    tt_eval_many,
    tt_exp_taylor,
    tt_from_dense,
    tt_hadamard,
    tt_to_dense,
    zeros_tt,
)


def clipped_random_tt(rng, dims, lo, hi, ranks=None):
    """Random TT whose entries are clipped into [lo, hi] (desk scale: the
    clipped dense tensor is re-decomposed exactly)."""
    if ranks is None:
        ranks = [3] * (len(dims) - 1)
    dense = np.clip(tt_to_dense(random_tt(dims, ranks, rng)).data, lo, hi)
    return tt_from_dense(dense, 0.0), dense


class TestMaxvol:
    def test_identity_selects_all_rows(self):
        rows = maxvol(np.eye(4))
        assert sorted(rows) == [0, 1, 2, 3]

    def test_rank1_is_argmax(self):
        m = np.array([[1.0], [2.0], [4.0], [8.0]])
        assert maxvol(m).tolist() == [3]

    def test_dominance_postcondition(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            m = rng.standard_normal((12, 4))
            rows = maxvol(m)
            b = np.linalg.solve(m[rows].T, m.T).T
            assert np.abs(b).max() <= 1.0 + 1e-2 + 1e-9

    def test_near_optimal_volume_vs_enumeration(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            m = rng.standard_normal((8, 3))
            rows = maxvol(m)
            vol = abs(np.linalg.det(m[rows]))
            best = max(
                abs(np.linalg.det(m[list(sub)])) for sub in itertools.combinations(range(8), 3)
            )
            assert vol >= best / (1.0 + 1e-2) ** 3

    def test_swap_gains_exceed_threshold(self):
        rng = np.random.default_rng(7)
        m = rng.standard_normal((40, 5))
        _, history = maxvol(m, return_history=True)
        # every recorded swap multiplies |det| by its gain, so the selected
        # volume is non-decreasing across iterations
        assert all(g > 1.0 + 1e-2 for g in history)

    def test_degenerate_raises(self):
        col = np.arange(6.0)[:, None]
        with pytest.raises(DegenerateMatrixError):
            maxvol(np.hstack([col, 2 * col]))


class TestMatrixCross:
    def test_rank1_exact(self):
        rng = np.random.default_rng(8)
        u, v = rng.standard_normal(9), rng.standard_normal(5)
        b = np.outer(u, v)
        res = matrix_cross(lambda r, c: b[np.ix_(r, c)], b.shape, 1, rng)
        np.testing.assert_allclose(res.reconstruct(), b, atol=1e-12 * np.abs(b).max())

    def test_rank3_exact(self):
        rng = np.random.default_rng(9)
        b = rng.standard_normal((9, 3)) @ rng.standard_normal((3, 7))
        res = matrix_cross(lambda r, c: b[np.ix_(r, c)], b.shape, 3, rng)
        assert np.abs(res.reconstruct() - b).max() <= 1e-10 * np.abs(b).max()

    def test_noisy_rank3(self):
        rng = np.random.default_rng(10)
        b = rng.standard_normal((20, 4)) @ rng.standard_normal((4, 15))
        b += 1e-8 * rng.standard_normal(b.shape)
        res = matrix_cross(lambda r, c: b[np.ix_(r, c)], b.shape, 4, rng)
        err = np.linalg.norm(res.reconstruct() - b) / np.linalg.norm(b)
        assert err <= 1e-6

    def test_eval_budget(self):
        rng = np.random.default_rng(11)
        n, m, r = 40, 30, 3
        b = rng.standard_normal((n, r)) @ rng.standard_normal((r, m))
        calls = []

        def entry(rows, cols):
            calls.append(len(rows) * len(cols))
            return b[np.ix_(rows, cols)]

        res = matrix_cross(entry, b.shape, r, rng, max_iters=20)
        assert res.n_evals == sum(calls)
        # a handful of alternating passes, each touching (n + m) * r entries
        assert res.n_evals <= 21 * (n + m) * r

    def test_pivot_block_is_cross_of_factors(self):
        rng = np.random.default_rng(12)
        b = rng.standard_normal((10, 2)) @ rng.standard_normal((2, 8))
        res = matrix_cross(lambda r, c: b[np.ix_(r, c)], b.shape, 2, rng)
        rows = res.pivots.row_sets[0]
        cols = res.pivots.col_sets[0]
        np.testing.assert_allclose(
            np.linalg.inv(res.core), b[np.ix_(rows, cols)], rtol=1e-10
        )

    def test_degenerate_after_retries(self):
        rng = np.random.default_rng(13)
        b = np.zeros((6, 6))  # rank deficient everywhere

        with pytest.raises(DegenerateMatrixError):
            matrix_cross(lambda r, c: b[np.ix_(r, c)], b.shape, 2, rng)


class TestTaylorExp:
    def test_zero_gives_ones(self):
        out = tt_exp_taylor(zeros_tt((2, 3, 2)), 10, 8, 0.0)
        np.testing.assert_allclose(tt_to_dense(out).data, 1.0, rtol=1e-14)

    def test_degree_zero_gives_ones(self):
        rng = np.random.default_rng(14)
        a = random_tt((2, 2, 2), (2, 2), rng)
        out = tt_exp_taylor(a, 0, 8, 0.0)
        np.testing.assert_allclose(tt_to_dense(out).data, 1.0, rtol=1e-14)

    def test_remainder_bound_on_negative_range(self):
        rng = np.random.default_rng(15)
        a, dense = clipped_random_tt(rng, (2, 2, 2, 2, 2), -3.0, 0.0)
        out = tt_exp_taylor(a, 10, 10_000, 0.0)
        err = np.abs(tt_to_dense(out).data - np.exp(dense)).max()
        assert err <= 3.0**11 / math.factorial(11) + 1e-12

    def test_rank_cap(self):
        rng = np.random.default_rng(16)
        a = random_tt((2,) * 6, (4,) * 5, rng, scale=0.2)
        out = tt_exp_taylor(a, 8, 3, 1e-14)
        assert max(out.ranks) <= 3


def small_cfg(seed, conv_tol=1e-10, max_rank=64, oversample=4, sweeps=8):
    return CrossConfig(
        max_rank=max_rank,
        n_sweeps=sweeps,
        sample_oversample=oversample,
        conv_tol=conv_tol,
        rng_seed=seed,
    )


class TestCrossVariants:
    @pytest.mark.parametrize("variant", ["sample", "sweep"])
    def test_identity_returns_argument(self, variant):
        rng = np.random.default_rng(17)
        a = random_tt((2, 3, 2, 3), (3, 4, 3), rng)
        out = tt_cross(lambda v: v, a, a, small_cfg(1), variant).tt
        dense = tt_to_dense(a).data
        err = np.abs(tt_to_dense(out).data - dense).max()
        assert err <= 1e-8 * np.abs(dense).max()

    @pytest.mark.parametrize("variant,tol", [("sample", 1e-6), ("sweep", 1e-7)])
    def test_exp_against_dense_oracle(self, variant, tol):
        rng = np.random.default_rng(18)
        a, dense = clipped_random_tt(rng, (2,) * 6, -10.0, 0.0)
        init = tt_exp_taylor(a, 10, 64, 0.0)
        out = tt_cross(np.exp, a, init, small_cfg(2), variant).tt
        rel = np.abs(tt_to_dense(out).data - np.exp(dense)).max() / np.exp(dense).max()
        assert rel <= tol

    def test_sweep_usually_at_least_as_accurate(self):
        # from a modest Taylor init, the merged two-core updates recover the
        # exponential better than single-core interpolation on most seeds
        rng = np.random.default_rng(19)
        wins = 0
        trials = 10
        for t in range(trials):
            a, dense = clipped_random_tt(rng, (2,) * 8, -10.0, 0.0, ranks=[3] * 7)
            init = tt_exp_taylor(a, 10, 10, 1e-12)
            cfg = small_cfg(100 + t, conv_tol=1e-8)
            truth = np.exp(dense)
            errs = {}
            for variant in ("sample", "sweep"):
                out = tt_cross(np.exp, a, init, cfg, variant).tt
                errs[variant] = np.abs(tt_to_dense(out).data - truth).max()
            if errs["sweep"] <= errs["sample"] * (1 + 1e-9):
                wins += 1
        assert wins >= 0.8 * trials

    def test_square_matches_hadamard_oracle(self):
        rng = np.random.default_rng(20)
        a = random_tt((2, 2, 2, 2, 2), (2, 2, 2, 2), rng)
        truth = tt_to_dense(tt_hadamard(a, a)).data
        out = tt_cross_sample(lambda v: v * v, a, a, small_cfg(3))
        assert np.abs(tt_to_dense(out).data - truth).max() <= 1e-8 * np.abs(truth).max()

    def test_rank_adapts_to_exact_rank(self):
        # exp of this tensor has exact TT ranks (2,2,2): log of a positive
        # rank-2 product tensor
        rng = np.random.default_rng(21)
        pos = random_tt((2,) * 5, (2,) * 4, rng)
        dense = np.abs(tt_to_dense(pos).data) + 0.5
        target_rank = max(tt_from_dense(dense, 1e-12).ranks)
        a = tt_from_dense(np.log(dense), 0.0)
        init = tt_exp_taylor(a, 10, 16, 1e-14)
        cfg = small_cfg(4, conv_tol=1e-9, oversample=2, max_rank=32)
        out = tt_cross_sweep(np.exp, a, init, cfg)
        assert max(out.ranks) <= target_rank + 2  # oversampling slack

    @pytest.mark.parametrize("variant", ["sample", "sweep"])
    def test_rank_cap_respected(self, variant):
        rng = np.random.default_rng(22)
        a = random_tt((3,) * 6, (5,) * 5, rng, scale=0.4)
        init = ones_tt(a.dims)
        cfg = small_cfg(5, conv_tol=1e-12, max_rank=3)
        out = tt_cross(np.exp, a, init, cfg, variant).tt
        assert max(out.ranks) <= 3

    @pytest.mark.parametrize("variant", ["sample", "sweep"])
    def test_seed_determinism(self, variant):
        rng = np.random.default_rng(23)
        a = random_tt((2,) * 5, (3,) * 4, rng, scale=0.5)
        init = tt_exp_taylor(a, 6, 8, 1e-12)
        first = tt_cross(np.exp, a, init, small_cfg(77), variant).tt
        second = tt_cross(np.exp, a, init, small_cfg(77), variant).tt
        assert first.ranks == second.ranks
        for c1, c2 in zip(first.cores, second.cores):
            np.testing.assert_array_equal(c1, c2)

    def test_pivot_interpolation_exactness(self):
        # on an exactly-representable f the converged sample cross
        # interpolates f at every retained pivot cross
        rng = np.random.default_rng(24)
        a = random_tt((2, 3, 2, 3), (2, 2, 2), rng)
        truth = tt_to_dense(tt_hadamard(a, a)).data
        res = tt_cross(lambda v: v * v, a, a, small_cfg(6))
        assert res.converged
        for b, (rows, cols) in enumerate(zip(res.pivots.row_sets, res.pivots.col_sets)):
            assert rows.shape == (res.tt.ranks[b + 1], b + 1)
            for prefix in rows[: 4]:
                for suffix in cols[: 4]:
                    idx = np.concatenate([prefix, suffix])
                    got = tt_eval_many(res.tt, idx[None, :])[0]
                    assert got == pytest.approx(truth[tuple(idx)], rel=1e-8, abs=1e-10)

    def test_non_finite_value_carries_index(self):
        rng = np.random.default_rng(25)
        a = random_tt((2, 2, 2), (2, 2), rng)  # has negative entries a.s.

        def unsafe_log(v):
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.log(v)

        with pytest.raises(NonFiniteValueError) as err:
            tt_cross_sample(unsafe_log, a, ones_tt(a.dims), small_cfg(7))
        assert len(err.value.index) == 3
        dims = a.dims
        assert all(0 <= k < d for k, d in zip(err.value.index, dims))

    def test_eval_count_scales_with_sweeps(self):
        rng = np.random.default_rng(26)
        a = random_tt((2,) * 6, (3,) * 5, rng, scale=0.3)
        cfg = small_cfg(8, conv_tol=1e-14, sweeps=4, oversample=4, max_rank=8)
        res = tt_cross(np.exp, a, ones_tt(a.dims), cfg)
        n, r, dim = a.order, 8 + 4, 2
        bound = res.n_half_sweeps * n * dim * (r + 4) * r * 4
        assert res.n_evals <= bound

    def test_order_one_tensor(self):
        a = tt_from_dense(np.array([-1.0, -2.0, 0.5]), 0.0)
        out = tt_cross_sample(np.exp, a, a, small_cfg(9))
        np.testing.assert_allclose(
            tt_to_dense(out).data, np.exp([-1.0, -2.0, 0.5]), rtol=1e-12
        )
