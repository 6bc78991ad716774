from .lasso import EstimatorKind, LassoFit, Penalty
from .simulation import (
    ColumnKind,
    CointSpec,
    DgpSample,
    DgpVariant,
    InnovationSpec,
    RegressorView,
    ReplicationOutcome,
    SimulationSummaryRow,
)
from .tuning import CvReport
from .diagnostics import DeviationBoundRow, EigenStudyRow, ExpectedDSummary
from .forecast import (
    Dataset,
    ForecastMethod,
    ForecastMetrics,
    ForecastRecord,
    ForecastSummaryRow,
    Transform,
)
from .run_config import Command, ConfigError, RunConfig, SimulationCell, TuningMode

__all__ = (
    "EstimatorKind",
    "LassoFit",
    "Penalty",
    "ColumnKind",
    "CointSpec",
    "DgpSample",
    "DgpVariant",
    "InnovationSpec",
    "RegressorView",
    "ReplicationOutcome",
    "SimulationSummaryRow",
    "CvReport",
    "DeviationBoundRow",
    "EigenStudyRow",
    "ExpectedDSummary",
    "Dataset",
    "ForecastMethod",
    "ForecastMetrics",
    "ForecastRecord",
    "ForecastSummaryRow",
    "Transform",
    "Command",
    "ConfigError",
    "RunConfig",
    "SimulationCell",
    "TuningMode",
)
