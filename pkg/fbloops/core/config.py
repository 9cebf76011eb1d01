"""Library and CLI configuration management."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings loaded from ``FBLOOPS_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="FBLOOPS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Project metadata
    PROJECT_DESCRIPTION: str = Field(
        default="Fractional Brownian loops, starbursts and their Edwards reweighting"
    )
    VERSION: str = Field(default="0.1.0")

    # Logging Configuration
    LOG_LEVEL: str = Field(default="INFO")
    LOG_FORMAT: str = Field(
        default="json",
        description="Log format: 'json' for machine consumption, 'console' for humans",
    )

    # Parallel Monte Carlo
    THREADS: int = Field(default=1, ge=1, description="Default worker thread count")
    CHUNK_SIZE: int = Field(
        default=256,
        ge=1,
        description="Samples per work unit; fixes the reduction order",
    )

    # Numerical policy
    MAX_MATRIX_BYTES: int = Field(
        default=512 * 1024 * 1024,
        description="Upper bound on a dense covariance matrix allocation",
    )
    PD_TOLERANCE: float = Field(default=1e-8, gt=0)
    JITTER_START: float = Field(default=1e-12, gt=0)
    JITTER_MAX: float = Field(default=1e-8, gt=0)
    QUAD_RTOL: float = Field(default=1e-4, gt=0)
    ESS_WARN: float = Field(
        default=10.0, description="ESS below which reweighted observables are flagged"
    )


# Create a singleton settings instance
settings = Settings()
