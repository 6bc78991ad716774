from .settings import (
    get_settings,
    Settings,
    SolverSettings,
    TuningSettings,
    SimulationSettings,
    ForecastSettings,
)

__all__ = [
    "get_settings",
    "Settings",
    "SolverSettings",
    "TuningSettings",
    "SimulationSettings",
    "ForecastSettings",
]
