import logging

import numpy as np

from app.models.lasso import EstimatorKind, LassoFit, Penalty
from app.services.lasso_solver import LassoSolver
from app.services.numerics import column_stats

logger = logging.getLogger(__name__)


class LassoEstimator:
    """
    Plain (Plasso) and standardized (Slasso) LASSO front-ends.

    Plasso penalizes every coefficient equally (H = I). Slasso weights each
    coefficient by its regressor's divisor-n sample standard deviation
    (H = D), which makes it equivalent to Plasso on the standardized design.
    """

    def __init__(self, solver: LassoSolver):
        self.solver = solver

    def penalty_weights(
        self, W: np.ndarray, kind: EstimatorKind
    ) -> tuple[np.ndarray, np.ndarray | None]:
        """
        Penalty weights for ``kind`` on design ``W``.

        Returns:
            Tuple of (weights, pinned mask). Slasso pins zero-variance
            columns and gives them a placeholder weight of 1.

        Raises:
            AllColumnsDegenerate: if Slasso finds no column with positive s.d.
        """
        W = np.asarray(W, dtype=float)
        p = W.shape[1]
        if kind == EstimatorKind.PLASSO:
            return np.ones(p), None

        _, sds, degenerate = column_stats(W)
        if p == 0 or np.all(degenerate):
            raise AllColumnsDegenerate("Slasso needs at least one column with positive variance")
        if np.any(degenerate):
            logger.warning(
                f"Slasso pins {int(degenerate.sum())} zero-variance column(s) at 0: "
                f"{np.flatnonzero(degenerate).tolist()}"
            )
        return np.where(degenerate, 1.0, sds), degenerate

    def fit(self, Y: np.ndarray, W: np.ndarray, lam: float, kind: EstimatorKind) -> LassoFit:
        weights, pinned = self.penalty_weights(W, kind)
        return self.solver.fit(Y, W, Penalty(lam=lam, weights=weights), pinned=pinned)

    def plasso(self, Y: np.ndarray, W: np.ndarray, lam: float) -> LassoFit:
        """Plain LASSO: unit penalty weights."""
        return self.fit(Y, W, lam, EstimatorKind.PLASSO)

    def slasso(self, Y: np.ndarray, W: np.ndarray, lam: float) -> LassoFit:
        """Standardized LASSO: penalty weights are the column s.d.s."""
        return self.fit(Y, W, lam, EstimatorKind.SLASSO)

    def lambda_max(self, Y: np.ndarray, W: np.ndarray, kind: EstimatorKind) -> float:
        weights, pinned = self.penalty_weights(W, kind)
        return self.solver.lambda_max(Y, W, weights, pinned=pinned)

    def fit_path(
        self,
        Y: np.ndarray,
        W: np.ndarray,
        kind: EstimatorKind,
        grid_size: int = 100,
        eps_ratio: float = 1e-4,
        lambdas: np.ndarray | None = None,
    ) -> list[LassoFit]:
        weights, pinned = self.penalty_weights(W, kind)
        return self.solver.fit_path(
            Y,
            W,
            weights,
            grid_size=grid_size,
            eps_ratio=eps_ratio,
            lambdas=lambdas,
            pinned=pinned,
        )

    def predict(self, fit: LassoFit, w_n: np.ndarray) -> float:
        """
        One-step-ahead prediction alpha-hat + w_n' theta-hat.

        Raises:
            DimensionMismatch: if len(w_n) differs from the number of coefficients
        """
        w_n = np.asarray(w_n, dtype=float)
        if w_n.shape != fit.coefficients.shape:
            raise DimensionMismatch(
                f"Regressor vector has shape {w_n.shape}, fit has {fit.coefficients.shape[0]} coefficients"
            )
        return float(fit.intercept + w_n @ fit.coefficients)

    def predict_rows(self, fit: LassoFit, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != fit.coefficients.shape[0]:
            raise DimensionMismatch(
                f"Regressor rows have shape {rows.shape}, fit has {fit.coefficients.shape[0]} coefficients"
            )
        return fit.intercept + rows @ fit.coefficients


class EstimatorError(Exception):
    """Exception raised by LassoEstimator"""

    pass


class AllColumnsDegenerate(EstimatorError):
    """Every regressor has zero sample variance"""


class DimensionMismatch(EstimatorError):
    """Regressor vector length does not match the fit"""
