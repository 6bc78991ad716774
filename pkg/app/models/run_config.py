"""
Validated configuration for one command-line run.
"""

from enum import Enum
from typing import Any

from pydantic import Field, ValidationError, field_validator, model_validator

from app.models.base import Base
from app.models.forecast import ForecastMethod, Transform
from app.models.lasso import EstimatorKind
from app.models.simulation import DgpVariant


class Command(str, Enum):
    SIMULATE = "simulate"
    EIGEN_STUDY = "eigen-study"
    FORECAST = "forecast"


class TuningMode(str, Enum):
    """How the simulation harness picks lambda"""

    CV = "cv"
    CALIBRATED = "calibrated"


class SimulationCell(Base):
    n: int = Field(ge=10)
    p_x: int = Field(ge=1)
    p_z: int = Field(ge=0)

    @classmethod
    def parse(cls, text: str, dgp: DgpVariant) -> "SimulationCell":
        """
        Parse ``n:p_x[:p_z]``. When p_z is omitted it follows the design:
        2n - p_x for DGP1/DGP2, 0 for DGP3/DGP4 and 2n - 2p_x for COINT.
        """
        parts = [part.strip() for part in text.split(":")]
        if len(parts) not in (2, 3) or not all(part.lstrip("-").isdigit() for part in parts):
            raise ConfigError(f"Cell must look like n:p_x[:p_z], got {text!r}")
        n, p_x = int(parts[0]), int(parts[1])
        if len(parts) == 3:
            p_z = int(parts[2])
        elif dgp.is_pure_unit_root:
            p_z = 0
        elif dgp == DgpVariant.COINT:
            p_z = 2 * n - 2 * p_x
        else:
            p_z = 2 * n - p_x
        try:
            return cls(n=n, p_x=p_x, p_z=p_z)
        except ValidationError as e:
            raise ConfigError(f"Invalid cell {text!r}: {e}") from e

    @property
    def label(self) -> str:
        return f"{self.n}:{self.p_x}:{self.p_z}"


class RunConfig(Base):
    """Everything one run needs; counts are positive and the design matches p_z"""

    command: Command
    seed: int = Field(default=20240101, ge=0)
    replications: int = Field(default=100, ge=1)
    output_dir: str = "results"
    jobs: int = Field(default=1, ge=1)

    # simulate
    dgp: DgpVariant = DgpVariant.DGP1
    cells: list[SimulationCell] = Field(default_factory=list)
    estimators: list[EstimatorKind] = Field(
        default_factory=lambda: [EstimatorKind.PLASSO, EstimatorKind.SLASSO]
    )
    tuning: TuningMode = TuningMode.CV
    folds: int = Field(default=10, ge=2)
    grid_size: int = Field(default=100, ge=2)
    eps_ratio: float = Field(default=1e-4, gt=0, lt=1)
    calibration_reps: int = Field(default=100, ge=1)

    # eigen-study
    n: int = Field(default=2000, ge=2)
    s_values: list[int] = Field(default_factory=list)
    expected_d_s: int = Field(default=4, ge=1)
    expected_d_reps: int = Field(default=200, ge=1)
    p_values: list[int] = Field(default_factory=list)

    # forecast
    data: str | None = None
    target: str | None = None
    window_years: list[int] = Field(default_factory=lambda: [10])
    horizons: list[int] = Field(default_factory=lambda: [1])
    methods: list[ForecastMethod] = Field(default_factory=lambda: list(ForecastMethod))
    transforms: list[Transform] = Field(default_factory=lambda: list(Transform))
    augmented: bool = False
    test_start: str | None = Field(
        default=None,
        description="Date label of the first forecast target; defaults to the first row every window allows",
    )

    @field_validator("s_values", "p_values", "window_years", "horizons")
    @classmethod
    def _positive_counts(cls, value: list[int]) -> list[int]:
        if any(v < 1 for v in value):
            raise ValueError(f"counts must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def _check_command(self) -> "RunConfig":
        if self.command == Command.SIMULATE:
            if not self.cells:
                raise ValueError("simulate needs at least one n:p_x[:p_z] cell")
            for cell in self.cells:
                if self.dgp.is_pure_unit_root and cell.p_z != 0:
                    raise ValueError(f"{self.dgp.value} requires p_z = 0, cell {cell.label}")
                if self.dgp in (DgpVariant.DGP1, DgpVariant.DGP2) and cell.p_z == 0:
                    raise ValueError(f"{self.dgp.value} requires p_z > 0, cell {cell.label}")
                if self.dgp == DgpVariant.COINT and cell.p_z != 2 * cell.n - 2 * cell.p_x:
                    raise ValueError(f"COINT requires p_z = 2n - 2p_x, cell {cell.label}")
        elif self.command == Command.EIGEN_STUDY:
            if not self.s_values:
                raise ValueError("eigen-study needs a nonempty s grid")
            if max(self.s_values) >= self.n:
                raise ValueError(f"every s must be < n = {self.n}")
        elif self.command == Command.FORECAST:
            if not self.data or not self.target:
                raise ValueError("forecast needs both a data file and a target column")
            if not self.methods or not self.transforms:
                raise ValueError("forecast needs at least one method and one transform")
        return self

    @classmethod
    def build(cls, values: dict[str, Any]) -> "RunConfig":
        """Validate ``values``, reporting every problem as a ConfigError."""
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(str(e)) from e


class ConfigError(Exception):
    """Invalid run configuration"""

    pass
