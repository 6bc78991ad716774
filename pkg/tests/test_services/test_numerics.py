import numpy as np
import pytest

from app.services.numerics import (
    NonSymmetric,
    NotPositiveDefinite,
    NumericsError,
    RngStream,
    cholesky_factor,
    cholesky_solve,
    column_stats,
    min_eigenvalue,
    ols,
    rng_normal,
    sym_eigen,
)


class TestRngStream:
    def test_empty_draw(self):
        stream = RngStream(1)
        assert rng_normal(stream, 0).shape == (0,)
        assert stream.position == 0

    def test_same_seed_same_sequence(self):
        a = RngStream(42).normal(1001)
        b = RngStream(42).normal(1001)
        assert np.array_equal(a, b)

    def test_position_counts_raw_words(self):
        stream = RngStream(3)
        stream.normal(5)
        assert stream.position == 6
        stream.normal(4)
        assert stream.position == 10

    def test_sequence_splits_across_calls(self):
        whole = RngStream(9).normal(10)
        stream = RngStream(9)
        parts = np.concatenate([stream.normal(4), stream.normal(6)])
        assert np.array_equal(whole, parts)

    def test_moments(self):
        draws = RngStream(20240101).normal(1_000_000)
        assert abs(draws.mean()) < 0.005
        assert abs(draws.var() - 1.0) < 0.01

    def test_spawn_offsets_seed(self):
        parent = RngStream(100)
        child = parent.spawn(5)
        assert child.seed == 105
        assert np.array_equal(child.normal(8), RngStream(105).normal(8))
        assert RngStream(2**64 - 1).spawn(2).seed == 1

    def test_negative_seed_rejected(self):
        with pytest.raises(NumericsError):
            RngStream(-1)


class TestCholesky:
    def test_solve_matches_known_solution(self, rng):
        M = rng.standard_normal((6, 6))
        A = M @ M.T + 6 * np.eye(6)
        x = rng.standard_normal((6, 2))
        np.testing.assert_allclose(cholesky_solve(A, A @ x), x, atol=1e-10)

    def test_factor_is_lower_triangular(self, rng):
        M = rng.standard_normal((4, 4))
        A = M @ M.T + np.eye(4)
        L = cholesky_factor(A)
        assert np.allclose(np.triu(L, 1), 0.0)
        np.testing.assert_allclose(L @ L.T, A, atol=1e-12)

    def test_negative_definite_raises(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_factor(-np.eye(3))

    def test_dimension_mismatch(self):
        with pytest.raises(NumericsError):
            cholesky_solve(np.eye(3), np.ones(4))


class TestOls:
    def test_recovers_exact_coefficients(self, rng):
        X = rng.standard_normal((40, 3))
        y = 1.5 + X @ np.array([1.0, -2.0, 0.5])
        intercept, coef = ols(X, y)
        assert intercept == pytest.approx(1.5, abs=1e-10)
        np.testing.assert_allclose(coef, [1.0, -2.0, 0.5], atol=1e-10)

    def test_no_regressors_returns_mean(self):
        intercept, coef = ols(np.zeros((4, 0)), np.array([1.0, 2.0, 3.0, 6.0]))
        assert intercept == pytest.approx(3.0)
        assert coef.shape == (0,)


class TestSymEigen:
    def test_matches_reference(self, rng):
        M = rng.standard_normal((12, 12))
        A = M + M.T
        values, vectors = sym_eigen(A)
        np.testing.assert_allclose(values, np.linalg.eigvalsh(A), atol=1e-9)
        np.testing.assert_allclose(A @ vectors, vectors * values, atol=1e-9)
        np.testing.assert_allclose(vectors.T @ vectors, np.eye(12), atol=1e-9)

    def test_ascending_order(self):
        values, _ = sym_eigen(np.diag([3.0, -1.0, 2.0]))
        np.testing.assert_allclose(values, [-1.0, 2.0, 3.0])

    def test_non_symmetric_raises(self):
        with pytest.raises(NonSymmetric):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_min_eigenvalue(self):
        A = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert min_eigenvalue(A) == pytest.approx(1.0, abs=1e-12)


class TestColumnStats:
    def test_population_sd_and_degenerate_flag(self):
        M = np.column_stack([[1.0, 3.0, 5.0, 7.0], [2.0, 2.0, 2.0, 2.0]])
        means, sds, degenerate = column_stats(M)
        np.testing.assert_allclose(means, [4.0, 2.0])
        assert sds[0] == pytest.approx(np.sqrt(5.0))
        assert sds[1] == 0.0
        assert degenerate.tolist() == [False, True]

    def test_needs_two_rows(self):
        with pytest.raises(NumericsError):
            column_stats(np.ones((1, 3)))
