import numpy as np
from pydantic import Field, model_validator

from app.models.base import Base
from app.models.lasso import EstimatorKind


class CvReport(Base):
    """Cross-validation over chronologically ordered blocks"""

    kind: EstimatorKind
    grid: np.ndarray = Field(description="Decreasing lambda grid shared by every fold")
    fold_errors: np.ndarray = Field(description="folds x grid validation MSE")
    mean_errors: np.ndarray = Field(description="Mean validation MSE per lambda")
    chosen_index: int = Field(ge=0)
    chosen_lambda: float = Field(ge=0)
    blocks: list[tuple[int, int]] = Field(
        default_factory=list,
        description="Validation blocks as half-open [start, stop) row ranges",
    )

    @model_validator(mode="after")
    def _check(self) -> "CvReport":
        folds, size = np.shape(self.fold_errors)
        if np.shape(self.grid) != (size,) or np.shape(self.mean_errors) != (size,):
            raise ValueError("grid, fold_errors and mean_errors disagree on the grid size")
        if self.blocks and len(self.blocks) != folds:
            raise ValueError("one block per fold is required")
        if self.chosen_lambda != self.grid[self.chosen_index]:
            raise ValueError("chosen_lambda must be the grid value at chosen_index")
        return self

    @property
    def folds(self) -> int:
        return int(np.shape(self.fold_errors)[0])
