"""
Request and response bodies of the HTTP API.
"""

from pydantic import BaseModel, Field, field_validator

from app.models.diagnostics import DeviationBoundRow, EigenStudyRow, ExpectedDSummary
from app.models.forecast import ForecastMethod, ForecastSummaryRow, Transform
from app.models.lasso import EstimatorKind
from app.models.run_config import TuningMode
from app.models.simulation import DgpVariant


class SimulationRequest(BaseModel):
    """Request body for POST /simulations"""

    dgp: DgpVariant = DgpVariant.DGP1
    cells: list[str] = Field(..., min_length=1, description="Cells as n:p_x[:p_z]")
    replications: int = Field(default=10, ge=1)
    seed: int = Field(default=20240101, ge=0)
    estimators: list[EstimatorKind] = Field(
        default_factory=lambda: [EstimatorKind.PLASSO, EstimatorKind.SLASSO]
    )
    tuning: TuningMode = TuningMode.CV
    folds: int = Field(default=10, ge=2)
    grid_size: int = Field(default=100, ge=2)
    eps_ratio: float = Field(default=1e-4, gt=0, lt=1)
    calibration_reps: int = Field(default=10, ge=1)
    jobs: int = Field(default=1, ge=1)


class EigenStudyRequest(BaseModel):
    """Request body for POST /diagnostics/eigen-study"""

    s_values: list[int] = Field(..., min_length=1)
    n: int = Field(default=2000, ge=2)
    replications: int = Field(default=20, ge=1)
    seed: int = Field(default=20240101, ge=0)
    p_values: list[int] = Field(default_factory=list, description="Deviation-bound p grid (optional)")


class EigenStudyResponse(BaseModel):
    rows: list[EigenStudyRow]
    deviation_bound: list[DeviationBoundRow] = Field(default_factory=list)


class ExpectedDRequest(BaseModel):
    """Request body for POST /diagnostics/expected-d"""

    s: int = Field(default=4, ge=1)
    n: int = Field(default=2000, ge=2)
    replications: int = Field(default=200, ge=1)
    seed: int = Field(default=20240101, ge=0)


class ExpectedDResponse(BaseModel):
    summary: ExpectedDSummary
    matrix: list[list[float]]


class ForecastRequest(BaseModel):
    """Request body for POST /forecasts"""

    data: str = Field(..., description="Path of a FRED-MD layout CSV readable by the server")
    target: str
    window_years: list[int] = Field(default_factory=lambda: [10], min_length=1)
    horizons: list[int] = Field(default_factory=lambda: [1], min_length=1)
    methods: list[ForecastMethod] = Field(default_factory=lambda: list(ForecastMethod), min_length=1)
    transforms: list[Transform] = Field(default_factory=lambda: list(Transform), min_length=1)
    augmented: bool = False
    test_start: str | None = None

    @field_validator("window_years", "horizons")
    @classmethod
    def _positive_counts(cls, value: list[int]) -> list[int]:
        if any(v < 1 for v in value):
            raise ValueError(f"window lengths and horizons must be positive, got {value}")
        return value


class ForecastResponse(BaseModel):
    summary: list[ForecastSummaryRow]
    selection_frequency: dict[str, dict[str, int]]
