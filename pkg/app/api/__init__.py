from .simulations import router as simulations_router
from .diagnostics import router as diagnostics_router
from .forecasts import router as forecasts_router

__all__ = ["simulations_router", "diagnostics_router", "forecasts_router"]
