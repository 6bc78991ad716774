import numpy as np
import pytest

from app.models.lasso import EstimatorKind
from app.services.estimators import AllColumnsDegenerate, DimensionMismatch, LassoEstimator
from app.services.lasso_solver import LassoSolver


@pytest.fixture
def design(rng):
    W = rng.standard_normal((60, 5)) * np.array([1.0, 2.0, 0.5, 3.0, 1.0])
    Y = 1.0 + W @ np.array([1.0, 0.0, -2.0, 0.0, 0.5]) + 0.3 * rng.standard_normal(60)
    return Y, W


class TestPenaltyWeights:
    def test_plasso_uses_unit_weights(self, estimator, design):
        _, W = design
        weights, pinned = estimator.penalty_weights(W, EstimatorKind.PLASSO)
        np.testing.assert_array_equal(weights, np.ones(5))
        assert pinned is None

    def test_slasso_uses_population_sd(self, estimator, design):
        _, W = design
        weights, pinned = estimator.penalty_weights(W, EstimatorKind.SLASSO)
        np.testing.assert_allclose(weights, W.std(axis=0))
        assert not pinned.any()

    def test_slasso_pins_constant_column(self, estimator, design):
        Y, W = design
        W = W.copy()
        W[:, 2] = 7.0
        weights, pinned = estimator.penalty_weights(W, EstimatorKind.SLASSO)
        assert pinned.tolist() == [False, False, True, False, False]
        assert weights[2] == 1.0
        fit = estimator.slasso(Y, W, 0.0)
        assert fit.coefficients[2] == 0.0
        assert 2 in fit.degenerate

    def test_all_columns_constant(self, estimator):
        with pytest.raises(AllColumnsDegenerate):
            estimator.penalty_weights(np.ones((10, 3)), EstimatorKind.SLASSO)


class TestFitAndPredict:
    def test_plasso_matches_solver(self, estimator, solver, design):
        Y, W = design
        fit = estimator.plasso(Y, W, 0.1)
        direct = solver.fit(Y, W, fit.penalty)
        np.testing.assert_array_equal(fit.coefficients, direct.coefficients)

    def test_slasso_is_plasso_on_standardized_design(self, design):
        Y, W = design
        estimator = LassoEstimator(LassoSolver(tol=1e-12))
        sds = W.std(axis=0)
        slasso = estimator.slasso(Y, W, 0.2)
        plasso = estimator.plasso(Y, W / sds, 0.2)
        np.testing.assert_allclose(slasso.coefficients * sds, plasso.coefficients, atol=1e-8)

    def test_slasso_scale_invariance(self, design):
        Y, W = design
        estimator = LassoEstimator(LassoSolver(tol=1e-12))
        scale = np.array([-2.0, 0.5, 10.0, 1.0, -2.0])
        base = estimator.slasso(Y, W, 0.2)
        scaled = estimator.slasso(Y, W * scale, 0.2)
        np.testing.assert_allclose(scaled.coefficients * scale, base.coefficients, atol=1e-8)
        np.testing.assert_allclose(
            estimator.predict_rows(scaled, W * scale),
            estimator.predict_rows(base, W),
            atol=1e-8,
        )

    def test_plasso_is_not_scale_invariant(self, estimator, design):
        Y, W = design
        scale = np.array([10.0, 0.1, 3.0, 1.0, 50.0])
        base = estimator.plasso(Y, W, 0.2)
        scaled = estimator.plasso(Y, W * scale, 0.2)
        assert not np.allclose(scaled.coefficients * scale, base.coefficients, atol=1e-3)

    def test_predict(self, estimator, design):
        Y, W = design
        fit = estimator.plasso(Y, W, 0.05)
        w_n = W[-1]
        assert estimator.predict(fit, w_n) == pytest.approx(fit.intercept + w_n @ fit.coefficients)

    def test_predict_dimension_mismatch(self, estimator, design):
        Y, W = design
        fit = estimator.plasso(Y, W, 0.05)
        with pytest.raises(DimensionMismatch):
            estimator.predict(fit, np.ones(4))
        with pytest.raises(DimensionMismatch):
            estimator.predict_rows(fit, np.ones((3, 6)))

    def test_lambda_max_zeroes_both_estimators(self, estimator, design):
        Y, W = design
        for kind in EstimatorKind:
            lam = estimator.lambda_max(Y, W, kind)
            fit = estimator.fit(Y, W, lam, kind)
            assert fit.active_set == []

    def test_plasso_and_slasso_agree_on_unit_scale_data(self, estimator, rng):
        W = rng.standard_normal((5000, 5))
        Y = W @ np.array([1.0, -0.5, 0.0, 0.25, 0.0]) + rng.standard_normal(5000)
        lam = 0.1 * estimator.lambda_max(Y, W, EstimatorKind.PLASSO)
        plasso = estimator.plasso(Y, W, lam)
        slasso = estimator.slasso(Y, W, lam)
        np.testing.assert_allclose(slasso.coefficients, plasso.coefficients, atol=0.05)
