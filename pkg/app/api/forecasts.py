"""
API endpoint for rolling-window forecast evaluations.
"""

from fastapi import APIRouter, HTTPException
from app.models.requests import ForecastRequest, ForecastResponse
from app.services.forecast_service import (
    EmptyDataset,
    ForecastServiceError,
    InsufficientHistory,
    ParseError,
    UnknownColumn,
    load_csv,
)
from app.factory import factory
import logging

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/forecasts", tags=["forecasts"])


@router.post("", response_model=ForecastResponse)
def run_forecasts(request: ForecastRequest):
    """
    Evaluate RWwD, AR-BIC, Plasso and Slasso forecasts of ``target``.

    Returns RMSPE/MAPE per (horizon, window, method, transform), for the
    full testing sample and each decade, plus LASSO selection counts.
    """
    service = factory.forecast_service
    try:
        ds = load_csv(request.data)
        records = service.run(
            ds,
            request.target,
            request.window_years,
            request.horizons,
            request.methods,
            request.transforms,
            augmented=request.augmented,
            test_start=request.test_start,
        )
    except (ParseError, EmptyDataset, UnknownColumn, InsufficientHistory) as e:
        raise HTTPException(status_code=400, detail=str(e))
    except ForecastServiceError as e:
        logger.error(f"Forecast evaluation failed: {e}")
        raise HTTPException(status_code=500, detail=str(e))

    return ForecastResponse(
        summary=service.summarize(records),
        selection_frequency={
            label: group.selection_frequency for label, group in service.selection_by_group(records).items()
        },
    )
