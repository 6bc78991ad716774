"""
Models for the Monte-Carlo data generating processes and their summaries.
"""

from enum import Enum

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.models.base import Base


class ColumnKind(str, Enum):
    """Classification of a regressor column"""

    UNIT_ROOT = "unit_root"
    STATIONARY = "stationary"
    COINTEGRATED = "cointegrated"  # observable member of a cointegration system


class DgpVariant(str, Enum):
    """Simulation designs"""

    DGP1 = "DGP1"  # mixed roots, beta_(1)
    DGP2 = "DGP2"  # mixed roots, beta_(2)
    DGP3 = "DGP3"  # pure unit roots, beta_(1)
    DGP4 = "DGP4"  # pure unit roots, beta_(2)
    COINT = "COINT"  # cointegrated regressors, triangular form

    @property
    def is_pure_unit_root(self) -> bool:
        return self in (DgpVariant.DGP3, DgpVariant.DGP4)

    @property
    def uses_beta2(self) -> bool:
        return self in (DgpVariant.DGP2, DgpVariant.DGP4, DgpVariant.COINT)


class InnovationSpec(Base):
    """Vector AR(1) innovation v_t = ar_coef v_{t-1} + eps_t, eps_t ~ N(0, variance_scale * omega)"""

    dim: int = Field(ge=1, description="Dimension of v_t")
    ar_coef: float = Field(default=0.4, description="AR(1) coefficient")
    variance_scale: float | None = Field(
        default=None,
        description="Scale of the innovation covariance; always 1 - ar_coef^2",
    )
    omega: np.ndarray = Field(description="Unconditional covariance of v_t")
    burn_in: int = Field(default=0, ge=0, description="Discarded leading periods")

    @field_validator("ar_coef")
    @classmethod
    def _stationary(cls, value: float) -> float:
        if abs(value) >= 1:
            raise ValueError(f"|ar_coef| must be < 1, got {value}")
        return value

    @model_validator(mode="after")
    def _check(self) -> "InnovationSpec":
        expected = 1.0 - self.ar_coef**2
        if self.variance_scale is None:
            self.variance_scale = expected
        elif abs(self.variance_scale - expected) > 1e-12:
            raise ValueError(f"variance_scale must equal 1 - ar_coef^2 = {expected}")
        omega = np.asarray(self.omega, dtype=float)
        if omega.shape != (self.dim, self.dim):
            raise ValueError(f"omega must be {self.dim}x{self.dim}, got {omega.shape}")
        if not np.allclose(omega, omega.T, rtol=0, atol=1e-12):
            raise ValueError("omega must be symmetric")
        self.omega = omega
        return self


class CointSpec(Base):
    """Triangular cointegration system X1_t = A X2_t + v1_t, X2_t = X2_{t-1} + e2_t"""

    p_c1: int = Field(ge=1, description="Cointegration rank")
    p_c2: int = Field(ge=1, description="Number of common stochastic trends")
    A: np.ndarray = Field(description="p_c1 x p_c2 cointegrating matrix")
    phi1: np.ndarray = Field(description="Coefficient of the lagged cointegration error")

    @model_validator(mode="after")
    def _check(self) -> "CointSpec":
        if np.shape(self.A) != (self.p_c1, self.p_c2):
            raise ValueError(f"A must be {self.p_c1}x{self.p_c2}")
        if np.shape(self.phi1) != (self.p_c1,):
            raise ValueError(f"phi1 must have length {self.p_c1}")
        return self

    @property
    def phi2(self) -> np.ndarray:
        """Implied coefficient on X2 in the feasible regression: -A' phi1"""
        return -self.A.T @ self.phi1


class RegressorView(Base):
    """A subset of the generated regressors used in one regression"""

    name: str
    columns: list[int] = Field(description="Column indices into DgpSample.w")
    theta_true: np.ndarray | None = Field(
        default=None,
        description="True coefficients on these columns, None when the view is misspecified",
    )
    oracle_columns: list[int] = Field(
        default_factory=list,
        description="Positions within the view used by the oracle OLS",
    )


class DgpSample(Base):
    """One generated data set with its ground truth"""

    variant: DgpVariant
    y: np.ndarray = Field(description="y_1..y_n")
    w: np.ndarray = Field(description="n x p regressors W_0..W_{n-1}")
    theta_true: np.ndarray = Field(description="True coefficients on all columns of w")
    column_kinds: list[ColumnKind]
    column_labels: list[str]
    next_regressors: np.ndarray = Field(description="W_n for the out-of-sample prediction")
    y_next: float = Field(description="y_{n+1}")
    unit_root_innovations: np.ndarray = Field(
        description="e_1..e_n driving the unit-root columns, n x (number of unit-root columns)"
    )
    s_x: int = Field(ge=0)
    s_z: int = Field(ge=0)
    views: dict[str, RegressorView] = Field(default_factory=dict)
    coint: CointSpec | None = None
    latent: dict[str, np.ndarray] = Field(
        default_factory=dict,
        description="Unobserved series kept for verification, e.g. the cointegration error v1_0..v1_n",
    )

    @model_validator(mode="after")
    def _check(self) -> "DgpSample":
        n, p = self.w.shape
        if self.y.shape != (n,):
            raise ValueError("y must have one entry per row of w")
        if self.theta_true.shape != (p,) or self.next_regressors.shape != (p,):
            raise ValueError("theta_true and next_regressors must have length p")
        if len(self.column_kinds) != p or len(self.column_labels) != p:
            raise ValueError("column_kinds and column_labels must have length p")
        return self

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def p(self) -> int:
        return self.w.shape[1]

    def columns_of(self, kind: ColumnKind) -> list[int]:
        return [j for j, k in enumerate(self.column_kinds) if k == kind]

    def view_data(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(Y, W restricted to the view, W_n restricted to the view)"""
        view = self.views[name]
        return self.y, self.w[:, view.columns], self.next_regressors[view.columns]


class ReplicationOutcome(Base):
    """Errors of one estimator on one regressor view in one replication"""

    regression: str
    estimator: str
    tuning: str
    error: float = Field(description="y_{n+1} minus the prediction")
    coef_sq: float | None = Field(default=None, description="||theta-hat - theta*||_2^2")
    coef_abs: float | None = Field(default=None, description="||theta-hat - theta*||_1")
    category_sq: dict[str, float] = Field(default_factory=dict)
    category_selected: dict[str, float] = Field(
        default_factory=dict, description="Fraction of each category in the active set"
    )
    lam: float | None = None


class SimulationSummaryRow(Base):
    """Replication averages for one (cell, regression, estimator, tuning) combination"""

    dgp: DgpVariant
    n: int
    p_x: int
    p_z: int
    regression: str
    estimator: str
    tuning: str
    replications: int
    rmspe: float
    mape: float
    coef_rmse: float | None = None
    coef_mae: float | None = None
    rmse_active_beta: float | None = None
    rmse_inactive_beta: float | None = None
    rmse_active_gamma: float | None = None
    rmse_inactive_gamma: float | None = None
    sel_active_beta: float | None = Field(default=None, description="% of active beta* selected")
    sel_inactive_beta: float | None = Field(default=None, description="% of inactive beta* selected")
    sel_active_gamma: float | None = Field(default=None, description="% of active gamma* selected")
    sel_inactive_gamma: float | None = Field(default=None, description="% of inactive gamma* selected")
    mean_lambda: float | None = None
