from .numerics import RngStream
from .lasso_solver import LassoSolver
from .estimators import LassoEstimator
from .dgp_service import DgpService
from .tuning_service import TuningService
from .diagnostics_service import DiagnosticsService
from .forecast_service import ForecastService
from .simulation_service import SimulationService
from .report_writer import ReportWriter

__all__ = [
    "RngStream",
    "LassoSolver",
    "LassoEstimator",
    "DgpService",
    "TuningService",
    "DiagnosticsService",
    "ForecastService",
    "SimulationService",
    "ReportWriter",
]
