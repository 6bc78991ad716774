import numpy as np
import pytest

from app.services.diagnostics_service import (
    EXPECTED_D_OFFSET,
    DiagnosticsError,
    DiagnosticsService,
    TooLarge,
    scaled_gram,
    sparse_restricted_min_eigen,
)
from app.services.numerics import RngStream


@pytest.fixture
def diagnostics(dgp) -> DiagnosticsService:
    return DiagnosticsService(dgp)


class TestScaledGram:
    def test_demeans_and_scales(self):
        X = np.array([[1.0, 2.0], [3.0, 2.0], [5.0, 8.0], [7.0, 4.0]])
        gram = scaled_gram(X)
        Xc = X - X.mean(axis=0)
        np.testing.assert_allclose(gram, Xc.T @ Xc / 4)
        np.testing.assert_allclose(scaled_gram(X, unit_root=True), gram / 4)

    def test_needs_two_rows(self):
        with pytest.raises(DiagnosticsError):
            scaled_gram(np.ones((1, 3)))


class TestSparseRestricted:
    def test_finds_worst_pair(self):
        Sigma = np.eye(5)
        Sigma[1, 3] = Sigma[3, 1] = 0.9
        assert sparse_restricted_min_eigen(Sigma, 1) == pytest.approx(1.0)
        assert sparse_restricted_min_eigen(Sigma, 2) == pytest.approx(0.1)
        assert sparse_restricted_min_eigen(Sigma, 3) == pytest.approx(0.1)

    def test_k_larger_than_p(self):
        Sigma = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert sparse_restricted_min_eigen(Sigma, 5) == pytest.approx(1.0)

    def test_limits(self):
        with pytest.raises(TooLarge):
            sparse_restricted_min_eigen(np.eye(10), 9)
        with pytest.raises(TooLarge):
            sparse_restricted_min_eigen(np.eye(21), 2)

    def test_empty_matrix(self):
        with pytest.raises(DiagnosticsError):
            sparse_restricted_min_eigen(np.zeros((0, 0)), 1)


class TestEigenStudy:
    def test_unit_root_eigenvalues_collapse(self, diagnostics):
        rows = diagnostics.eigen_study([4, 16], 500, 20, RngStream(1))
        assert [row.s for row in rows] == [4, 16]
        for row in rows:
            assert row.min_diag_iid == pytest.approx(1.0, abs=0.15)
            assert 0.5 < row.min_eig_iid <= 1.2
            assert row.min_eig_unit < row.min_diag_unit
        assert rows[1].min_eig_unit < rows[0].min_eig_unit
        assert rows[1].min_eig_unit < 0.05
        assert rows[1].min_eig_unit / rows[1].min_eig_iid < rows[0].min_eig_unit / rows[0].min_eig_iid

    def test_deterministic_and_thread_independent(self, dgp):
        serial = DiagnosticsService(dgp).eigen_study([2, 5], 100, 6, RngStream(3))
        parallel = DiagnosticsService(dgp, jobs=3).eigen_study([2, 5], 100, 6, RngStream(3))
        assert serial == parallel

    def test_rejects_bad_s(self, diagnostics):
        with pytest.raises(DiagnosticsError):
            diagnostics.eigen_study([], 100, 2, RngStream(1))
        with pytest.raises(DiagnosticsError):
            diagnostics.eigen_study([100], 100, 2, RngStream(1))


class TestExpectedD:
    def test_converges_to_sixth_of_identity(self, diagnostics):
        D = diagnostics.expected_D(2, 500, 1000, RngStream(2))
        np.testing.assert_allclose(D, np.eye(2) / 6, atol=0.02)
        summary = diagnostics.summarize_D(D, 500, 1000)
        assert summary.s == 2
        assert summary.max_abs_diagonal_error < 0.02
        assert summary.max_abs_off_diagonal < 0.02

    def test_needs_replications(self, diagnostics):
        with pytest.raises(DiagnosticsError):
            diagnostics.expected_D(2, 100, 0, RngStream(1))

    def test_small_runs_are_flagged(self, diagnostics, caplog):
        with caplog.at_level("WARNING"):
            diagnostics.expected_D(2, 50, 5, RngStream(1))
        assert "smoke run" in caplog.text

    def test_does_not_reuse_eigen_study_draws(self, diagnostics):
        stream = RngStream(9)
        D = diagnostics.expected_D(1, 50, 3, stream)
        walks = [np.cumsum(stream.spawn(EXPECTED_D_OFFSET + r).normal_matrix(50, 1), axis=0) for r in range(3)]
        expected = np.mean([scaled_gram(w, unit_root=True) for w in walks], axis=0)
        np.testing.assert_allclose(D, expected)
        same_seed = np.mean(
            [scaled_gram(np.cumsum(stream.spawn(r).normal_matrix(50, 1), axis=0), unit_root=True) for r in range(3)],
            axis=0,
        )
        assert not np.allclose(D, same_seed)


class TestDeviationBound:
    def test_nondecreasing_in_p(self, diagnostics):
        rows = diagnostics.deviation_bound_rows([1, 5, 20], 100, 10, RngStream(4))
        assert [row.p for row in rows] == [1, 5, 20]
        values = [row.deviation for row in rows]
        assert all(v > 0 for v in values)
        assert values == sorted(values)

    def test_rejects_empty(self, diagnostics):
        with pytest.raises(DiagnosticsError):
            diagnostics.deviation_bound_curve([], 100, 2, RngStream(1))
