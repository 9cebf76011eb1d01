"""JSON records written by the CLI."""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict


class EstimateRecord(BaseModel):
    """Summary of a local-time estimate."""

    model_config = ConfigDict(
        extra="allow",
        json_schema_extra={
            "example": {
                "quantity": "L",
                "H": 0.25,
                "d": 2,
                "T": 1.0,
                "eps": 0.01,
                "delta": None,
                "n_samples": 1000,
                "grid_N": 128,
                "mean": 0.21,
                "std_error": 0.002,
            }
        },
    )

    quantity: str
    H: float
    d: int
    T: Optional[float] = None
    lengths: Optional[list[float]] = None
    eps: float
    delta: Optional[float] = None
    centered: bool = False
    branches: Optional[list[int]] = None
    n_samples: int
    grid_N: int
    mean: float
    std_error: float
    expected: Optional[float] = None
    per_path_file: Optional[str] = None


class ExtrapolationRecord(BaseModel):
    """eps -> 0 extrapolation of a ladder of ensemble means."""

    eps: list[float]
    means: list[float]
    value: float
    residual: float
    order: int


class ErrorRecord(BaseModel):
    """Error payload printed when a command fails."""

    message: str
    exit_code: int
    details: dict[str, Any] = {}
