"""
API endpoints for the eigenvalue and deviation-bound studies.
"""

from fastapi import APIRouter, HTTPException
from app.models.requests import (
    EigenStudyRequest,
    EigenStudyResponse,
    ExpectedDRequest,
    ExpectedDResponse,
)
from app.services.diagnostics_service import DiagnosticsError
from app.services.numerics import RngStream
from app.factory import factory
import logging

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/diagnostics", tags=["diagnostics"])


@router.post("/eigen-study", response_model=EigenStudyResponse)
def eigen_study(request: EigenStudyRequest):
    """Minimum diagonal entries and eigenvalues of i.i.d. versus unit-root Gram matrices"""
    stream = RngStream(request.seed)
    try:
        rows = factory.diagnostics_service.eigen_study(request.s_values, request.n, request.replications, stream)
        bound = []
        if request.p_values:
            bound = factory.diagnostics_service.deviation_bound_rows(
                request.p_values, request.n, request.replications, stream
            )
        return EigenStudyResponse(rows=rows, deviation_bound=bound)
    except DiagnosticsError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Eigen study failed: {e}")
        raise HTTPException(status_code=500, detail=f"Eigen study failed: {str(e)}")


@router.post("/expected-d", response_model=ExpectedDResponse)
def expected_d(request: ExpectedDRequest):
    """Monte-Carlo mean of the Brownian functional matrix; compare with I_s / 6"""
    try:
        D = factory.diagnostics_service.expected_D(request.s, request.n, request.replications, RngStream(request.seed))
    except DiagnosticsError as e:
        raise HTTPException(status_code=400, detail=str(e))
    summary = factory.diagnostics_service.summarize_D(D, request.n, request.replications)
    return ExpectedDResponse(summary=summary, matrix=D.tolist())
