"""Dense-oracle tests of the TT data structure and its exact arithmetic.

Every operation is checked entrywise against explicit numpy tensors on
seeded random instances; the worked 2x2x2 example with slices [[1,2],[2,4]]
and [[2,4],[4,8]] pins down the slice-product evaluation convention and the
rank-1 compressibility case.
"""

import numpy as np
import pytest

from ttinfer import (
    CapacityError,
    DenseTensor,
    TensorTrain,
    constant_tt,
    ones_tt,
    random_tt,
    rank_one_tt,
    tt_add,
    tt_dump,
    tt_eval,
    tt_eval_many,
    tt_from_dense,
    tt_hadamard,
    tt_load,
    tt_marginalize_except,
    tt_mode_multiply,
    tt_norm,
    tt_scale,
    tt_to_dense,
    tt_truncate,
    zeros_tt,
)


def random_instance(rng, max_order=8, max_dim=4, max_rank=6):
    order = int(rng.integers(2, max_order + 1))
    dims = rng.integers(2, max_dim + 1, size=order)
    ranks = rng.integers(1, max_rank + 1, size=order - 1)
    return random_tt(dims, ranks, rng)


def worked_example_tensor():
    """The 2x2x2 tensor whose mode-2 slices are [[1,2],[2,4]] and [[2,4],[4,8]];
    it factors exactly as the rank-1 product of three (1,2) vectors."""
    dense = np.empty((2, 2, 2))
    dense[:, 0, :] = [[1.0, 2.0], [2.0, 4.0]]
    dense[:, 1, :] = [[2.0, 4.0], [4.0, 8.0]]
    return dense


def worked_example_trivial_tt():
    """Rank-2 representation: identity stacks around the raw slices."""
    eye = np.eye(2)
    g1 = eye.reshape(1, 2, 2)
    g2 = worked_example_tensor()
    g3 = eye.reshape(2, 2, 1)
    return TensorTrain([g1, g2, g3])


class TestEval:
    def test_worked_example_entry(self):
        # paper-convention index (1,2,2) is (0,1,1) 0-based
        tt = worked_example_trivial_tt()
        assert tt_eval(tt, (0, 1, 1)) == pytest.approx(4.0)
        np.testing.assert_allclose(tt_to_dense(tt).data, worked_example_tensor())

    def test_all_ones_rank1(self):
        tt = ones_tt((2, 3, 2))
        for idx in np.ndindex(2, 3, 2):
            assert tt_eval(tt, idx) == 1.0

    def test_matches_dense_on_full_grid(self):
        rng = np.random.default_rng(11)
        tt = random_tt((3, 3, 3, 3), (2, 2, 2), rng)
        dense = tt_to_dense(tt).data
        for idx in np.ndindex(*tt.dims):
            assert tt_eval(tt, idx) == pytest.approx(dense[idx], rel=1e-12, abs=1e-14)

    def test_eval_many_matches_eval(self):
        rng = np.random.default_rng(12)
        tt = random_instance(rng)
        idx = np.column_stack([rng.integers(0, d, size=50) for d in tt.dims])
        batch = tt_eval_many(tt, idx)
        single = [tt_eval(tt, row) for row in idx]
        np.testing.assert_allclose(batch, single, rtol=1e-12)

    def test_out_of_range_raises(self):
        tt = ones_tt((2, 2))
        with pytest.raises(IndexError):
            tt_eval(tt, (0, 2))
        with pytest.raises(IndexError):
            tt_eval(tt, (0, 0, 0))


class TestDenseBridge:
    def test_worked_example_rank1_form(self):
        vec = np.array([1.0, 2.0])
        tt = rank_one_tt([vec, vec, vec])
        np.testing.assert_allclose(tt_to_dense(tt).data, worked_example_tensor())

    def test_zero_tt_dense(self):
        np.testing.assert_array_equal(tt_to_dense(zeros_tt((2, 2, 2))).data, 0.0)

    def test_round_trip(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            tt = random_instance(rng)
            dense = tt_to_dense(tt).data
            back = tt_to_dense(tt_from_dense(dense, 0.0)).data
            # errors accumulate relative to the tensor scale, not per entry
            np.testing.assert_allclose(back, dense, atol=1e-12 * np.abs(dense).max())

    def test_budget_guard(self):
        tt = ones_tt((4, 4, 4))
        with pytest.raises(CapacityError):
            tt_to_dense(tt, budget=63)
        with pytest.raises(CapacityError):
            DenseTensor.from_array(np.zeros(64), budget=63)


class TestFromDense:
    def test_worked_example_compresses_to_rank1(self):
        tt = tt_from_dense(worked_example_tensor(), 1e-12)
        assert tt.ranks == (1, 1, 1, 1)

    def test_outer_product_rank1(self):
        rng = np.random.default_rng(14)
        vecs = [rng.standard_normal(3) for _ in range(4)]
        dense = np.einsum("i,j,k,l->ijkl", *vecs)
        tt = tt_from_dense(dense, 1e-12)
        assert tt.max_rank == 1

    def test_exact_at_zero_tol_with_dimension_bounds(self):
        rng = np.random.default_rng(15)
        dense = rng.standard_normal((3, 3, 3, 3))
        tt = tt_from_dense(dense, 0.0)
        assert tt.ranks == (1, 3, 9, 3, 1)
        np.testing.assert_allclose(tt_to_dense(tt).data, dense, rtol=1e-12, atol=1e-13)

    def test_zero_tensor(self):
        tt = tt_from_dense(np.zeros((2, 3, 2)), 0.0)
        assert tt.max_rank == 1
        np.testing.assert_array_equal(tt_to_dense(tt).data, 0.0)


class TestArithmetic:
    def test_add_rank_formula(self):
        rng = np.random.default_rng(16)
        a = random_tt((2, 3, 2), (2, 3), rng)
        b = random_tt((2, 3, 2), (4, 1), rng)
        assert tt_add(a, b).ranks == (1, 6, 4, 1)

    def test_add_zero_identity(self):
        rng = np.random.default_rng(17)
        a = random_instance(rng)
        s = tt_add(a, zeros_tt(a.dims))
        np.testing.assert_allclose(tt_to_dense(s).data, tt_to_dense(a).data, rtol=1e-12)

    def test_add_dense_oracle(self):
        rng = np.random.default_rng(18)
        for _ in range(10):
            dims = tuple(rng.integers(2, 4, size=4))
            a = random_tt(dims, rng.integers(1, 5, size=3), rng)
            b = random_tt(dims, rng.integers(1, 5, size=3), rng)
            np.testing.assert_allclose(
                tt_to_dense(tt_add(a, b)).data,
                tt_to_dense(a).data + tt_to_dense(b).data,
                rtol=1e-11,
                atol=1e-12,
            )

    def test_add_shape_mismatch(self):
        with pytest.raises(ValueError):
            tt_add(ones_tt((2, 2)), ones_tt((2, 3)))

    def test_hadamard_rank_formula(self):
        rng = np.random.default_rng(19)
        a = random_tt((2, 2, 2), (2, 3), rng)
        b = random_tt((2, 2, 2), (2, 2), rng)
        assert tt_hadamard(a, b).ranks == (1, 4, 6, 1)

    def test_hadamard_ones_identity(self):
        rng = np.random.default_rng(20)
        a = random_instance(rng)
        h = tt_hadamard(a, ones_tt(a.dims))
        np.testing.assert_allclose(tt_to_dense(h).data, tt_to_dense(a).data, rtol=1e-12)

    def test_hadamard_dense_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            dims = tuple(rng.integers(2, 4, size=4))
            a = random_tt(dims, rng.integers(1, 4, size=3), rng)
            b = random_tt(dims, rng.integers(1, 4, size=3), rng)
            np.testing.assert_allclose(
                tt_to_dense(tt_hadamard(a, b)).data,
                tt_to_dense(a).data * tt_to_dense(b).data,
                rtol=1e-10,
                atol=1e-12,
            )

    def test_scale(self):
        rng = np.random.default_rng(22)
        a = random_instance(rng)
        dense = tt_to_dense(a).data
        np.testing.assert_allclose(tt_to_dense(tt_scale(a, 1.0)).data, dense, rtol=1e-15)
        np.testing.assert_array_equal(tt_to_dense(tt_scale(a, 0.0)).data, 0.0)
        lam = -1.0 / (2.0 * 0.37)
        scaled = tt_scale(a, lam)
        assert scaled.ranks == a.ranks
        np.testing.assert_allclose(tt_to_dense(scaled).data, lam * dense, rtol=1e-12)


class TestModeOps:
    def test_mode_multiply_identity(self):
        rng = np.random.default_rng(23)
        a = random_instance(rng)
        mode = int(rng.integers(0, a.order))
        out = tt_mode_multiply(a, mode, np.eye(a.dims[mode]))
        np.testing.assert_allclose(tt_to_dense(out).data, tt_to_dense(a).data, rtol=1e-12)

    def test_mode_multiply_ones_row_marginalizes(self):
        rng = np.random.default_rng(24)
        a = random_tt((3, 4, 3), (2, 2), rng)
        out = tt_mode_multiply(a, 1, np.ones((1, 4)))
        np.testing.assert_allclose(
            tt_to_dense(out).data[:, 0, :], tt_to_dense(a).data.sum(axis=1), rtol=1e-11
        )

    def test_mode_multiply_dense_oracle(self):
        rng = np.random.default_rng(25)
        a = random_tt((2, 3, 4, 2), (2, 3, 2), rng)
        u = rng.standard_normal((5, 4))
        out = tt_mode_multiply(a, 2, u)
        assert out.dims == (2, 3, 5, 2)
        expect = np.einsum("ijkl,mk->ijml", tt_to_dense(a).data, u)
        np.testing.assert_allclose(tt_to_dense(out).data, expect, rtol=1e-11, atol=1e-12)

    def test_mode_multiply_shape_errors(self):
        a = ones_tt((2, 3))
        with pytest.raises(ValueError):
            tt_mode_multiply(a, 0, np.ones((2, 3)))
        with pytest.raises(IndexError):
            tt_mode_multiply(a, 2, np.ones((2, 2)))

    def test_marginalize_all_ones(self):
        tt = ones_tt((3, 3, 3, 3))
        for mode in range(4):
            np.testing.assert_allclose(tt_marginalize_except(tt, mode), 27.0)

    def test_marginalize_separable(self):
        vecs = [np.array([1.0, 2.0]), np.array([0.5, 1.5, 2.5]), np.array([3.0, 1.0])]
        tt = rank_one_tt(vecs)
        expect = vecs[1] * vecs[0].sum() * vecs[2].sum()
        np.testing.assert_allclose(tt_marginalize_except(tt, 1), expect, rtol=1e-12)

    def test_marginalize_dense_oracle(self):
        rng = np.random.default_rng(26)
        for _ in range(10):
            a = random_instance(rng, max_order=5)
            dense = tt_to_dense(a).data
            mode = int(rng.integers(0, a.order))
            axes = tuple(i for i in range(a.order) if i != mode)
            np.testing.assert_allclose(
                tt_marginalize_except(a, mode), dense.sum(axis=axes), rtol=1e-10, atol=1e-11
            )

    def test_marginalize_invariant_under_exact_truncation(self):
        rng = np.random.default_rng(27)
        a = random_instance(rng)
        t = tt_truncate(a, 0.0)
        for mode in range(a.order):
            np.testing.assert_allclose(
                tt_marginalize_except(a, mode),
                tt_marginalize_except(t, mode),
                rtol=1e-10,
                atol=1e-11,
            )


class TestTruncate:
    def test_worked_example_truncates_to_rank1_exactly(self):
        tt = worked_example_trivial_tt()
        assert tt.ranks == (1, 2, 2, 1)
        out = tt_truncate(tt, 1e-12)
        assert out.ranks == (1, 1, 1, 1)
        np.testing.assert_allclose(tt_to_dense(out).data, worked_example_tensor(), rtol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(28)
        a = random_instance(rng)
        once = tt_truncate(a, 1e-3)
        twice = tt_truncate(once, 1e-3)
        np.testing.assert_allclose(
            tt_to_dense(twice).data, tt_to_dense(once).data, rtol=1e-12, atol=1e-13
        )

    @pytest.mark.parametrize("tol", [1e-2, 1e-4, 1e-6, 1e-8, 1e-10])
    def test_error_bound_over_tolerance_sweep(self, tol):
        rng = np.random.default_rng(29)
        for _ in range(5):
            a = random_tt((3, 3, 3, 3, 3), (8, 8, 8, 8), rng)
            dense = tt_to_dense(a).data
            norm = np.linalg.norm(dense)
            out = tt_truncate(a, tol)
            err = np.linalg.norm(tt_to_dense(out).data - dense)
            assert err <= np.sqrt(a.order - 1) * tol * norm

    def test_max_rank_cap(self):
        rng = np.random.default_rng(30)
        a = random_tt((3, 3, 3, 3), (6, 6, 6), rng)
        out = tt_truncate(a, 0.0, max_rank=2)
        assert max(out.ranks) <= 2

    def test_zero_tensor(self):
        out = tt_truncate(zeros_tt((2, 3, 2)), 1e-6)
        assert out.max_rank == 1
        np.testing.assert_array_equal(tt_to_dense(out).data, 0.0)


class TestNorm:
    def test_zero(self):
        assert tt_norm(zeros_tt((2, 2, 2))) == 0.0

    def test_all_ones(self):
        assert tt_norm(ones_tt((2, 2, 2))) == pytest.approx(np.sqrt(8.0))

    def test_dense_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            a = random_instance(rng)
            assert tt_norm(a) == pytest.approx(np.linalg.norm(tt_to_dense(a).data), rel=1e-11)


class TestStructure:
    def test_boundary_and_chain_validation(self):
        with pytest.raises(ValueError):
            TensorTrain([np.ones((2, 2, 1))])
        with pytest.raises(ValueError):
            TensorTrain([np.ones((1, 2, 3)), np.ones((2, 2, 1))])

    def test_immutability(self):
        tt = ones_tt((2, 2))
        with pytest.raises(AttributeError):
            tt.cores = ()
        with pytest.raises(ValueError):
            tt.cores[0][0, 0, 0] = 5.0

    def test_constant(self):
        tt = constant_tt((2, 2, 2), 3.5)
        np.testing.assert_array_equal(tt_to_dense(tt).data, 3.5)

    def test_dump_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(32)
        tt = random_instance(rng)
        path = tmp_path / "dump.txt"
        tt_dump(tt, path)
        back = tt_load(path)
        assert back.dims == tt.dims and back.ranks == tt.ranks
        for a, b in zip(tt.cores, back.cores):
            np.testing.assert_array_equal(a, b)
