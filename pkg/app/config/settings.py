from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache
from typing import Literal


class SolverSettings(BaseSettings):
    """Coordinate-descent solver configuration"""

    model_config = SettingsConfigDict(env_prefix="SOLVER_", extra="ignore")

    tol: float = Field(
        default=1e-7,
        gt=0,
        description="Tolerance on the KKT gap at which a fit is declared converged",
    )
    max_sweeps: int = Field(
        default=10_000,
        ge=1,
        description="Maximum number of coordinate sweeps per fit",
    )
    check_objective: bool = Field(
        default=False,
        description="Assert the objective is nonincreasing after every sweep",
    )


class TuningSettings(BaseSettings):
    """Tuning-parameter selection configuration"""

    model_config = SettingsConfigDict(env_prefix="TUNING_", extra="ignore")

    folds: int = Field(
        default=10,
        ge=2,
        description="Number of chronologically ordered cross-validation blocks",
    )
    grid_size: int = Field(
        default=100,
        ge=2,
        description="Number of log-spaced lambda values on the path",
    )
    eps_ratio: float = Field(
        default=1e-4,
        gt=0,
        lt=1,
        description="Smallest lambda on the grid as a fraction of lambda_max",
    )
    calibration_reps: int = Field(
        default=100,
        ge=1,
        description="Replications used to calibrate the initial lambda",
    )


class SimulationSettings(BaseSettings):
    """Monte-Carlo run defaults"""

    model_config = SettingsConfigDict(env_prefix="SIMULATION_", extra="ignore")

    seed: int = Field(
        default=20240101,
        ge=0,
        description="Base seed; replication r uses seed + r",
    )
    replications: int = Field(
        default=100,
        ge=1,
        description="Default number of Monte-Carlo replications",
    )
    jobs: int = Field(
        default=1,
        ge=1,
        description="Maximum number of worker threads",
    )
    output_dir: str = Field(
        default="results",
        description="Directory where CSV output is written",
    )


class ForecastSettings(BaseSettings):
    """Rolling-window forecasting configuration"""

    model_config = SettingsConfigDict(env_prefix="FORECAST_", extra="ignore")

    q_max: int = Field(
        default=12,
        ge=1,
        description="Largest lag order considered by the AR-BIC benchmark",
    )
    n_factors: int = Field(
        default=4,
        ge=0,
        description="Number of diffusion indices added to the augmented design",
    )
    n_lags: int = Field(
        default=4,
        ge=1,
        description="Lags of every unique regressor in the augmented design",
    )
    rows_per_year: int = Field(
        default=12,
        ge=1,
        description="Observations per year (12 for monthly data)",
    )


class CORSSettings(BaseSettings):
    """CORS (Cross-Origin Resource Sharing) configuration"""

    model_config = SettingsConfigDict(env_prefix="CORS_", extra="ignore")

    allowed_origins: str = Field(
        default="http://localhost:3000,http://localhost:8080,http://127.0.0.1:3000,http://127.0.0.1:8080",
        description="Comma-separated list of allowed origins for CORS",
    )
    allow_credentials: bool = Field(
        default=True,
        description="Allow credentials in CORS requests",
    )
    allow_methods: list[str] = Field(
        default=["*"],
        description="Allowed HTTP methods",
    )
    allow_headers: list[str] = Field(
        default=["*"],
        description="Allowed HTTP headers",
    )

    @property
    def origins_list(self) -> list[str]:
        """Convert comma-separated origins to list"""
        return [origin.strip() for origin in self.allowed_origins.split(",") if origin.strip()]


class Settings(BaseSettings):
    """Main application settings"""

    model_config = SettingsConfigDict(
        case_sensitive=False,
        extra="ignore",
        env_nested_delimiter="__",
    )

    environment: Literal["development", "staging", "production"] = Field(
        default="development",
        description="Application environment",
    )
    app_name: str = Field(
        default="Persistent LASSO",
        description="Application name",
    )
    app_version: str = Field(
        default="0.1.0",
        description="Application version",
    )
    debug: bool = Field(
        default=False,
        description="Enable debug mode",
    )
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO",
        description="Root log level used by the command-line driver",
    )

    # Nested settings - will read from environment variables using their env_prefix
    solver: SolverSettings = Field(
        default_factory=SolverSettings
    )
    tuning: TuningSettings = Field(
        default_factory=TuningSettings
    )
    simulation: SimulationSettings = Field(
        default_factory=SimulationSettings
    )
    forecast: ForecastSettings = Field(
        default_factory=ForecastSettings
    )
    cors: CORSSettings = Field(
        default_factory=CORSSettings
    )


@lru_cache
def get_settings() -> Settings:
    """
    Get cached application settings.
    Settings are loaded from environment variables with proper prefixes.
    """
    return Settings()
