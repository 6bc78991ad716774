from functools import lru_cache
from pathlib import Path
from app.config.settings import get_settings, Settings
from app.services.lasso_solver import LassoSolver
from app.services.estimators import LassoEstimator
from app.services.dgp_service import DgpService
from app.services.tuning_service import TuningService
from app.services.diagnostics_service import DiagnosticsService
from app.services.forecast_service import ForecastService
from app.services.simulation_service import SimulationService
from app.services.report_writer import ReportWriter
import logging

logger = logging.getLogger(__name__)


class Factory:
    """
    Application factory for dependency injection.
    Provides centralized access to all services.
    """

    def __init__(self, settings: Settings | None = None):
        self.settings: Settings = settings or get_settings()

        # Estimation core
        self.solver = LassoSolver.from_settings(self.settings.solver)
        self.estimator = LassoEstimator(self.solver)

        # Data generation and tuning
        self.dgp_service = DgpService()
        self.tuning_service = TuningService.from_settings(
            self.estimator,
            self.dgp_service,
            self.settings.tuning,
        )

        # Workflows
        self.diagnostics_service = DiagnosticsService(
            self.dgp_service,
            jobs=self.settings.simulation.jobs,
        )
        self.forecast_service = ForecastService.from_settings(
            self.estimator,
            self.tuning_service,
            self.settings.forecast,
        )
        self.simulation_service = SimulationService(
            dgp=self.dgp_service,
            estimator=self.estimator,
            tuning=self.tuning_service,
        )
        logger.debug(
            f"Services initialized (tol={self.settings.solver.tol}, folds={self.settings.tuning.folds})"
        )

    def report_writer(self, output_dir: str | Path | None = None) -> ReportWriter:
        return ReportWriter(output_dir or self.settings.simulation.output_dir)


@lru_cache
def get_factory():
    """Singleton factory for the application."""
    return Factory()


# Create the singleton factory instance
factory = get_factory()

__all__ = ["Factory", "factory", "get_factory", "get_settings"]
