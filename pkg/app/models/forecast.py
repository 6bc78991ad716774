"""
Models for the rolling-window forecasting pipeline.
"""

from enum import Enum

import numpy as np
from pydantic import Field, model_validator

from app.models.base import Base


class ForecastMethod(str, Enum):
    """Forecasting methods compared in the evaluation"""

    RWWD = "RWwD"  # random walk with drift
    ARBIC = "ARBIC"  # direct AR(q), q chosen by BIC
    PLASSO = "Plasso"
    SLASSO = "Slasso"

    @property
    def is_lasso(self) -> bool:
        return self in (ForecastMethod.PLASSO, ForecastMethod.SLASSO)


class Transform(str, Enum):
    """How the predictors enter the design"""

    NT = "NT"  # raw levels
    ST = "ST"  # transformed per TCODE


class Dataset(Base):
    """A monthly panel in the FRED-MD layout"""

    dates: list[str]
    names: list[str]
    tcodes: np.ndarray = Field(description="Integer transformation code per column, 1..7")
    values: np.ndarray = Field(description="rows = periods, one column per name")

    @model_validator(mode="after")
    def _check(self) -> "Dataset":
        values = np.asarray(self.values, dtype=float)
        tcodes = np.asarray(self.tcodes, dtype=int)
        if values.ndim != 2 or values.shape != (len(self.dates), len(self.names)):
            raise ValueError(f"values must be {len(self.dates)}x{len(self.names)}, got {values.shape}")
        if tcodes.shape != (len(self.names),):
            raise ValueError("one tcode per column is required")
        if np.any((tcodes < 1) | (tcodes > 7)):
            raise ValueError("tcodes must lie in 1..7")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must not contain missing entries")
        self.values = values
        self.tcodes = tcodes
        return self

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def tcode(self, name: str) -> int:
        return int(self.tcodes[self.names.index(name)])


class ForecastRecord(Base):
    """One out-of-sample forecast made at ``origin`` for ``origin + horizon``"""

    origin: int = Field(ge=0, description="Row index of the last observation used")
    horizon: int = Field(ge=1)
    method: ForecastMethod
    transform: Transform
    window_years: int = Field(ge=1)
    target_date: str = ""
    prediction: float
    actual: float
    selected: list[str] = Field(default_factory=list, description="Regressors in the LASSO active set")
    lam: float | None = None

    @property
    def error(self) -> float:
        return self.actual - self.prediction


class ForecastMetrics(Base):
    rmspe: float
    mape: float
    count: int
    selection_frequency: dict[str, int] = Field(default_factory=dict)


class ForecastSummaryRow(Base):
    """RMSPE and MAPE for one (horizon, window, method, transform) over one testing period"""

    horizon: int
    window_years: int
    method: ForecastMethod
    transform: Transform
    period: str = Field(default="full", description="'full' or a decade label such as '1990s'")
    count: int
    rmspe: float
    mape: float


class ActiveCountRow(Base):
    """Average number of selected regressors of one category per LASSO forecast"""

    horizon: int
    window_years: int
    method: ForecastMethod
    transform: Transform
    breakdown: str = Field(description="'tcode' or 'lag'")
    category: str = Field(description="'all', a TCODE, 'target' or 'factor'; or a lag number")
    forecasts: int
    mean_active: float


class ScaleSummaryRow(Base):
    """Spread of the predictors' sample s.d.s within one TCODE group under NT or ST"""

    transform: Transform
    tcode: str = Field(description="A TCODE or 'all'")
    count: int
    min_sd: float
    median_sd: float
    max_sd: float
    sd_ratio: float | None = Field(default=None, description="max_sd / min_sd; None when min_sd is 0")
