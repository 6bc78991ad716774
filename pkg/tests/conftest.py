from pathlib import Path

import numpy as np
import pytest

from app.services.dgp_service import DgpService
from app.services.estimators import LassoEstimator
from app.services.forecast_service import ForecastService
from app.services.lasso_solver import LassoSolver
from app.services.tuning_service import TuningService


def write_planted_csv(path: Path, rows: int = 150, seed: int = 7) -> Path:
    """
    Monthly panel in the FRED-MD layout whose target follows
    TARGET_t = 0.5 * A_{t-1} + 0.01 * noise.

    A is a random walk (tcode 2), B a positive geometric walk (tcode 5),
    C a stationary AR(1) (tcode 1).
    """
    rng = np.random.default_rng(seed)
    A = np.cumsum(rng.standard_normal(rows))
    B = 100.0 * np.exp(np.cumsum(0.01 * rng.standard_normal(rows)))
    C = np.zeros(rows)
    for t in range(1, rows):
        C[t] = 0.5 * C[t - 1] + rng.standard_normal()
    target = np.zeros(rows)
    target[1:] = 0.5 * A[:-1] + 0.01 * rng.standard_normal(rows - 1)

    dates = [f"{1995 + t // 12}-{t % 12 + 1:02d}-01" for t in range(rows)]
    lines = ["sasdate,A,B,C,TARGET", "Transform:,2,5,1,2"]
    for t in range(rows):
        lines.append(f"{dates[t]},{float(A[t])!r},{float(B[t])!r},{float(C[t])!r},{float(target[t])!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def planted_csv(tmp_path) -> Path:
    return write_planted_csv(tmp_path / "planted.csv")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240101)


@pytest.fixture
def solver() -> LassoSolver:
    return LassoSolver()


@pytest.fixture
def estimator(solver) -> LassoEstimator:
    return LassoEstimator(solver)


@pytest.fixture
def dgp() -> DgpService:
    return DgpService()


@pytest.fixture
def tuning(estimator, dgp) -> TuningService:
    return TuningService(estimator, dgp, folds=10, grid_size=20, eps_ratio=1e-4)


@pytest.fixture
def forecast_service(estimator, tuning) -> ForecastService:
    return ForecastService(estimator, tuning, q_max=4, n_factors=4, n_lags=4, rows_per_year=12)
