"""
Penalized-regression models shared by the solver and the estimators.
"""

from enum import Enum

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.models.base import Base


class EstimatorKind(str, Enum):
    """Which penalty weights the LASSO uses"""

    PLASSO = "plasso"  # H = I, plain LASSO
    SLASSO = "slasso"  # H = diag(sample s.d.), standardized LASSO


class Penalty(Base):
    """Tuning parameter and per-coefficient weights (the diagonal of H)"""

    lam: float = Field(ge=0, description="Tuning parameter lambda")
    weights: np.ndarray = Field(description="Strictly positive penalty weights, length p")

    @field_validator("weights")
    @classmethod
    def _positive_weights(cls, value: np.ndarray) -> np.ndarray:
        value = np.asarray(value, dtype=float)
        if value.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(value)) or np.any(value <= 0):
            raise ValueError("all penalty weights must be finite and > 0")
        return value

    @classmethod
    def unit(cls, lam: float, p: int) -> "Penalty":
        return cls(lam=lam, weights=np.ones(p))


class LassoFit(Base):
    """Result of one penalized least-squares fit"""

    intercept: float = Field(description="Unpenalized intercept alpha-hat")
    coefficients: np.ndarray = Field(description="Coefficient vector theta-hat, length p")
    penalty: Penalty
    active_set: list[int] = Field(
        default_factory=list,
        description="Indices of the nonzero coefficients",
    )
    kkt_residual: float = Field(ge=0, description="Largest KKT gap at the returned iterate")
    objective: float = Field(description="n^-1 ||Y - W theta||^2 + lam ||H theta||_1 on demeaned data")
    sweeps: int = Field(ge=0, description="Coordinate sweeps performed")
    converged: bool = Field(default=True)
    degenerate: list[int] = Field(
        default_factory=list,
        description="Zero-variance columns whose coefficient was pinned at 0",
    )

    @model_validator(mode="after")
    def _check_active_set(self) -> "LassoFit":
        if not np.isfinite(self.objective):
            raise ValueError("objective must be finite")
        expected = np.flatnonzero(self.coefficients).tolist()
        if self.active_set != expected:
            raise ValueError("active_set must list exactly the nonzero coefficients")
        return self

    @property
    def lam(self) -> float:
        return self.penalty.lam
