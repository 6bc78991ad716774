"""
Tuning-parameter selection: cross-validation over chronologically ordered
blocks and rate-based calibration of a pilot lambda.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from app.config.settings import TuningSettings
from app.models.lasso import EstimatorKind
from app.models.simulation import DgpVariant
from app.models.tuning import CvReport
from app.services.dgp_service import FULL_VIEW, DgpService
from app.services.estimators import LassoEstimator
from app.services.lasso_solver import LassoSolver
from app.services.numerics import RngStream

logger = logging.getLogger(__name__)


def time_series_blocks(n: int, folds: int) -> list[tuple[int, int]]:
    """
    Split rows 0..n-1 into ``folds`` contiguous [start, stop) blocks whose
    sizes differ by at most one; the larger blocks come first.
    """
    if folds < 2:
        raise TuningServiceError(f"folds must be >= 2, got {folds}")
    if n < 2 * folds:
        raise TuningServiceError(f"n={n} is too short for {folds} folds (need n >= {2 * folds})")
    return [(int(part[0]), int(part[-1]) + 1) for part in np.array_split(np.arange(n), folds)]


def calibrate_lambda(lambda0: float, n0: int, p0: int, n: int, p: int, kind: EstimatorKind) -> float:
    """
    Rescale a pilot lambda fitted at (n0, p0) to (n, p).

    Slasso follows ((n^-1/2 ln p) / (n0^-1/2 ln p0))^2, Plasso follows
    (ln p / ln p0)^(3/2).
    """
    if min(lambda0, n0, p0, n, p) <= 0:
        raise TuningServiceError("calibrate_lambda needs positive arguments")
    if kind == EstimatorKind.SLASSO:
        ratio = (n**-0.5 * math.log(p)) / (n0**-0.5 * math.log(p0))
        return lambda0 * ratio**2
    return lambda0 * (math.log(p) / math.log(p0)) ** 1.5


def lower_median(values: list[float]) -> float:
    """Median of an odd count; the lower middle value of an even count."""
    if not values:
        raise TuningServiceError("median of an empty list")
    ordered = sorted(values)
    return float(ordered[(len(ordered) - 1) // 2])


class TuningService:
    """Selects lambda for Plasso and Slasso"""

    def __init__(
        self,
        estimator: LassoEstimator,
        dgp: DgpService,
        folds: int = 10,
        grid_size: int = 100,
        eps_ratio: float = 1e-4,
        jobs: int = 1,
    ):
        self.estimator = estimator
        self.dgp = dgp
        self.folds = folds
        self.grid_size = grid_size
        self.eps_ratio = eps_ratio
        self.jobs = jobs

    @classmethod
    def from_settings(
        cls, estimator: LassoEstimator, dgp: DgpService, settings: TuningSettings
    ) -> "TuningService":
        return cls(
            estimator,
            dgp,
            folds=settings.folds,
            grid_size=settings.grid_size,
            eps_ratio=settings.eps_ratio,
        )

    def lambda_grid(self, Y: np.ndarray, W: np.ndarray, kind: EstimatorKind, grid_size: int, eps_ratio: float) -> np.ndarray:
        lam_max = self.estimator.lambda_max(Y, W, kind)
        return LassoSolver.lambda_grid(lam_max, grid_size, eps_ratio)

    def cv_select(
        self,
        Y: np.ndarray,
        W: np.ndarray,
        kind: EstimatorKind,
        folds: int | None = None,
        grid_size: int | None = None,
        eps_ratio: float | None = None,
    ) -> CvReport:
        """
        Block cross-validation.

        Every block is held out once and the model is fit on the remaining
        rows in time order, including blocks after the held-out one. All
        folds share the grid built from the full-sample lambda_max.

        Args:
            Y: response of length n
            W: n x p regressors
            kind: Plasso or Slasso
            folds: number of blocks (n >= 2 * folds)
            grid_size: lambda values on the grid
            eps_ratio: smallest lambda as a fraction of lambda_max

        Returns:
            CvReport with the lambda minimizing mean validation MSE; the
            first (largest) lambda wins ties
        """
        folds = self.folds if folds is None else folds
        grid_size = self.grid_size if grid_size is None else grid_size
        eps_ratio = self.eps_ratio if eps_ratio is None else eps_ratio
        Y = np.asarray(Y, dtype=float)
        W = np.asarray(W, dtype=float)

        blocks = time_series_blocks(Y.shape[0], folds)
        grid = self.lambda_grid(Y, W, kind, grid_size, eps_ratio)

        def fold_error(block: tuple[int, int]) -> np.ndarray:
            start, stop = block
            train = np.r_[0:start, stop:Y.shape[0]]
            path = self.estimator.fit_path(Y[train], W[train], kind, lambdas=grid)
            held_y = Y[start:stop]
            held_w = W[start:stop]
            return np.array(
                [np.mean((held_y - self.estimator.predict_rows(fit, held_w)) ** 2) for fit in path]
            )

        if self.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.jobs) as pool:
                rows = list(pool.map(fold_error, blocks))
        else:
            rows = [fold_error(block) for block in blocks]

        fold_errors = np.vstack(rows)
        mean_errors = fold_errors.mean(axis=0)
        chosen = int(np.argmin(mean_errors))
        logger.debug(
            f"{kind.value} CV: chose lambda={grid[chosen]:.4e} (index {chosen} of {grid.size}), "
            f"mse={mean_errors[chosen]:.4f}"
        )
        return CvReport(
            kind=kind,
            grid=grid,
            fold_errors=fold_errors,
            mean_errors=mean_errors,
            chosen_index=chosen,
            chosen_lambda=float(grid[chosen]),
            blocks=blocks,
        )

    def calibrate_initial(
        self,
        variant: DgpVariant,
        n0: int,
        p_x0: int,
        p_z0: int,
        kind: EstimatorKind,
        reps: int,
        stream: RngStream,
        view: str = FULL_VIEW,
        folds: int | None = None,
        grid_size: int | None = None,
        eps_ratio: float | None = None,
    ) -> float:
        """
        Pilot lambda: the lower median of CV choices over ``reps`` fresh
        samples at (n0, p_x0, p_z0). Replication r draws from stream.spawn(r).
        """
        if reps < 1:
            raise TuningServiceError(f"reps must be >= 1, got {reps}")
        choices = []
        for rep in range(reps):
            sample = self.dgp.generate(variant, n0, p_x0, p_z0, stream.spawn(rep))
            Y, W, _ = sample.view_data(view)
            choices.append(self.cv_select(Y, W, kind, folds, grid_size, eps_ratio).chosen_lambda)
        lambda0 = lower_median(choices)
        logger.info(
            f"Calibrated {kind.value} pilot lambda at n={n0}, p_x={p_x0}: {lambda0:.4e} over {reps} replications"
        )
        return lambda0


class TuningServiceError(Exception):
    """Exception raised by TuningService"""

    pass
