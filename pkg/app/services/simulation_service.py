"""
Monte-Carlo harness comparing the oracle, Plasso and Slasso on the
simulation designs.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from app.models.lasso import EstimatorKind
from app.models.run_config import RunConfig, SimulationCell, TuningMode
from app.models.simulation import (
    ColumnKind,
    DgpSample,
    ReplicationOutcome,
    RegressorView,
    SimulationSummaryRow,
)
from app.services.dgp_service import DgpService
from app.services.estimators import LassoEstimator
from app.services.numerics import RngStream, ols
from app.services.tuning_service import TuningService, calibrate_lambda

logger = logging.getLogger(__name__)

ORACLE = "oracle"
CATEGORIES = ("active_beta", "inactive_beta", "active_gamma", "inactive_gamma")

# calibration samples come from seed + CALIBRATION_OFFSET + r
CALIBRATION_OFFSET = 1_000_000


def coefficient_categories(sample: DgpSample, view: RegressorView) -> dict[str, np.ndarray]:
    """
    Positions within ``view`` of the active and inactive unit-root (beta)
    and stationary (gamma) coefficients. Cointegrated columns belong to
    neither.
    """
    if view.theta_true is None:
        return {}
    kinds = [sample.column_kinds[j] for j in view.columns]
    active = view.theta_true != 0
    out = {}
    for label, kind in (("beta", ColumnKind.UNIT_ROOT), ("gamma", ColumnKind.STATIONARY)):
        of_kind = np.array([k == kind for k in kinds], dtype=bool)
        out[f"active_{label}"] = np.flatnonzero(of_kind & active)
        out[f"inactive_{label}"] = np.flatnonzero(of_kind & ~active)
    return {name: idx for name, idx in out.items() if idx.size}


class SimulationService:
    """Runs replications of a RunConfig and averages the outcomes"""

    def __init__(self, dgp: DgpService, estimator: LassoEstimator, tuning: TuningService):
        self.dgp = dgp
        self.estimator = estimator
        self.tuning = tuning

    def evaluate(
        self,
        sample: DgpSample,
        view_name: str,
        estimator: str,
        tuning: str,
        theta_hat: np.ndarray,
        prediction: float,
        lam: float | None = None,
    ) -> ReplicationOutcome:
        view = sample.views[view_name]
        outcome = ReplicationOutcome(
            regression=view_name,
            estimator=estimator,
            tuning=tuning,
            error=float(sample.y_next - prediction),
            lam=lam,
        )
        if view.theta_true is None:
            return outcome
        diff = theta_hat - view.theta_true
        outcome.coef_sq = float(diff @ diff)
        outcome.coef_abs = float(np.sum(np.abs(diff)))
        selected = theta_hat != 0
        for name, idx in coefficient_categories(sample, view).items():
            outcome.category_sq[name] = float(diff[idx] @ diff[idx])
            outcome.category_selected[name] = float(np.mean(selected[idx]))
        return outcome

    def oracle(self, sample: DgpSample, view_name: str) -> ReplicationOutcome:
        """OLS on the true support of the view"""
        Y, W, w_next = sample.view_data(view_name)
        cols = sample.views[view_name].oracle_columns
        intercept, coef = ols(W[:, cols], Y)
        theta_hat = np.zeros(W.shape[1])
        theta_hat[cols] = coef
        return self.evaluate(sample, view_name, ORACLE, "none", theta_hat, intercept + w_next @ theta_hat)

    def lasso(
        self,
        sample: DgpSample,
        view_name: str,
        kind: EstimatorKind,
        cfg: RunConfig,
        pilot: dict[tuple[str, EstimatorKind], tuple[float, int, int]],
    ) -> ReplicationOutcome:
        Y, W, w_next = sample.view_data(view_name)
        if cfg.tuning == TuningMode.CV:
            lam = self.tuning.cv_select(
                Y, W, kind, folds=cfg.folds, grid_size=cfg.grid_size, eps_ratio=cfg.eps_ratio
            ).chosen_lambda
        else:
            lambda0, n0, p0 = pilot[(view_name, kind)]
            lam = calibrate_lambda(lambda0, n0, p0, W.shape[0], W.shape[1], kind)
        fit = self.estimator.fit(Y, W, lam, kind)
        return self.evaluate(
            sample,
            view_name,
            kind.value,
            cfg.tuning.value,
            fit.coefficients,
            self.estimator.predict(fit, w_next),
            lam=lam,
        )

    def replicate(
        self,
        cfg: RunConfig,
        cell: SimulationCell,
        stream: RngStream,
        pilot: dict[tuple[str, EstimatorKind], tuple[float, int, int]],
    ) -> list[ReplicationOutcome]:
        """All estimators on every view of one generated sample"""
        sample = self.dgp.generate(cfg.dgp, cell.n, cell.p_x, cell.p_z, stream)
        outcomes = []
        for view_name in sample.views:
            outcomes.append(self.oracle(sample, view_name))
            for kind in cfg.estimators:
                outcomes.append(self.lasso(sample, view_name, kind, cfg, pilot))
        return outcomes

    def calibrate(self, cfg: RunConfig, stream: RngStream) -> dict[tuple[str, EstimatorKind], tuple[float, int, int]]:
        """
        Pilot lambda per (view, estimator) at the smallest (n, p_x) cell,
        as (lambda0, n0, p0) with p0 the view width.
        """
        base = min(cfg.cells, key=lambda c: (c.n, c.p_x))
        sample = self.dgp.generate(cfg.dgp, base.n, base.p_x, base.p_z, stream.spawn(CALIBRATION_OFFSET))
        pilot = {}
        for view_name, view in sample.views.items():
            for kind in cfg.estimators:
                lambda0 = self.tuning.calibrate_initial(
                    cfg.dgp,
                    base.n,
                    base.p_x,
                    base.p_z,
                    kind,
                    cfg.calibration_reps,
                    stream.spawn(CALIBRATION_OFFSET),
                    view=view_name,
                    folds=cfg.folds,
                    grid_size=cfg.grid_size,
                    eps_ratio=cfg.eps_ratio,
                )
                pilot[(view_name, kind)] = (lambda0, base.n, len(view.columns))
        return pilot

    def run(self, cfg: RunConfig) -> list[SimulationSummaryRow]:
        """
        Replicate every cell of ``cfg``. Replication r of each cell draws
        from seed + r, so adding replications never changes earlier ones.
        """
        stream = RngStream(cfg.seed)
        pilot = self.calibrate(cfg, stream) if cfg.tuning == TuningMode.CALIBRATED else {}
        rows: list[SimulationSummaryRow] = []
        for cell in cfg.cells:
            logger.info(f"Simulating {cfg.dgp.value} cell {cell.label}: {cfg.replications} replications")

            def one(rep: int) -> list[ReplicationOutcome]:
                return self.replicate(cfg, cell, stream.spawn(rep), pilot)

            if cfg.jobs > 1:
                with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                    results = list(pool.map(one, range(cfg.replications)))
            else:
                results = [one(rep) for rep in range(cfg.replications)]
            rows.extend(self.summarize(cfg, cell, results))
        return rows

    def summarize(
        self, cfg: RunConfig, cell: SimulationCell, results: list[list[ReplicationOutcome]]
    ) -> list[SimulationSummaryRow]:
        groups: dict[tuple[str, str, str], list[ReplicationOutcome]] = {}
        for outcomes in results:
            for outcome in outcomes:
                groups.setdefault((outcome.regression, outcome.estimator, outcome.tuning), []).append(outcome)

        rows = []
        for (regression, estimator, tuning), outcomes in groups.items():
            errors = np.array([o.error for o in outcomes])
            row = SimulationSummaryRow(
                dgp=cfg.dgp,
                n=cell.n,
                p_x=cell.p_x,
                p_z=cell.p_z,
                regression=regression,
                estimator=estimator,
                tuning=tuning,
                replications=len(outcomes),
                rmspe=float(np.sqrt(np.mean(errors**2))),
                mape=float(np.mean(np.abs(errors))),
            )
            if outcomes[0].coef_sq is not None:
                row.coef_rmse = float(np.sqrt(np.mean([o.coef_sq for o in outcomes])))
                row.coef_mae = float(np.mean([o.coef_abs for o in outcomes]))
            for name in CATEGORIES:
                if name in outcomes[0].category_sq:
                    setattr(row, f"rmse_{name}", float(np.sqrt(np.mean([o.category_sq[name] for o in outcomes]))))
                    setattr(row, f"sel_{name}", 100.0 * float(np.mean([o.category_selected[name] for o in outcomes])))
            lams = [o.lam for o in outcomes if o.lam is not None]
            if lams:
                row.mean_lambda = float(np.mean(lams))
            rows.append(row)
        return rows
