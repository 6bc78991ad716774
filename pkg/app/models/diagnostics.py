"""
Rows emitted by the eigenvalue and deviation-bound studies.
"""

from pydantic import Field

from app.models.base import Base


class EigenStudyRow(Base):
    """Replication averages of the minimum diagonal entry and minimum eigenvalue of the scaled Gram"""

    s: int = Field(ge=1, description="Number of regressors")
    min_diag_iid: float
    min_eig_iid: float
    min_diag_unit: float = Field(description="Unit-root panel, Gram scaled by n^2")
    min_eig_unit: float = Field(description="Unit-root panel, Gram scaled by n^2")


class DeviationBoundRow(Base):
    """Replication average of 4 ||n^-1 sum X_{t-1} u_t||_inf for the first p unit roots"""

    p: int = Field(ge=1)
    deviation: float


class ExpectedDSummary(Base):
    """Monte-Carlo mean of the Brownian functional matrix; the target is I_s / 6"""

    s: int = Field(ge=1)
    n: int
    replications: int
    mean_diagonal: float
    max_abs_diagonal_error: float = Field(description="max_j |D_jj - 1/6|")
    max_abs_off_diagonal: float
