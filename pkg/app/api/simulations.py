"""
API endpoint for Monte-Carlo simulation runs.
"""

from fastapi import APIRouter, HTTPException
from app.models.requests import SimulationRequest
from app.models.run_config import Command, ConfigError, RunConfig, SimulationCell
from app.models.simulation import SimulationSummaryRow
from app.services.dgp_service import DgpServiceError
from app.factory import factory
import logging

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/simulations", tags=["simulations"])


@router.post("", response_model=list[SimulationSummaryRow])
def run_simulation(request: SimulationRequest):
    """
    Run replications of one design and return the summary rows.

    Each cell is ``n:p_x[:p_z]``; p_z defaults to what the design implies.
    Rows cover the oracle and every requested estimator on each regressor view.
    """
    try:
        cfg = RunConfig.build(
            {
                "command": Command.SIMULATE,
                "cells": [SimulationCell.parse(cell, request.dgp) for cell in request.cells],
                **request.model_dump(exclude={"cells"}),
            }
        )
    except ConfigError as e:
        raise HTTPException(status_code=400, detail=str(e))

    try:
        return factory.simulation_service.run(cfg)
    except DgpServiceError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Simulation failed: {e}")
        raise HTTPException(status_code=500, detail=f"Simulation failed: {str(e)}")
