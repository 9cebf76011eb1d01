"""Local-time estimates, coupling weights and Edwards reweighting results."""

import math
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fbloops.models.kernel import Grid


def _mean_and_stderr(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    if n == 0:
        return math.nan, math.nan
    mean = float(np.mean(values))
    if n < 2:
        return mean, math.nan
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


class LocalTimeEstimate(BaseModel):
    """Per-path values of a (regularized) local time plus ensemble statistics."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    quantity: str = Field(
        ..., description="L, Lambda, Gamma, L_branch, L_cross or L_combined"
    )
    per_path: np.ndarray
    epsilon: float = Field(..., gt=0.0)
    centered: bool = False
    delta: Optional[float] = None
    branches: Optional[tuple[int, ...]] = None
    mean: float = math.nan
    std_error: float = math.nan
    hurst: float
    dim: int
    grid: Grid = Field(exclude=True)

    @classmethod
    def from_values(cls, values: np.ndarray, **fields) -> "LocalTimeEstimate":
        values = np.asarray(values, dtype=float)
        mean, std_error = _mean_and_stderr(values)
        return cls(per_path=values, mean=mean, std_error=std_error, **fields)

    @property
    def n_samples(self) -> int:
        return int(self.per_path.size)

    def record(self) -> dict:
        """Flat JSON-ready summary (per-path values excluded)."""
        geometry = self.grid.geometry
        return {
            "quantity": self.quantity,
            "H": self.hurst,
            "d": self.dim,
            "T": geometry.T if self.grid.is_circle else None,
            "lengths": None if self.grid.is_circle else list(geometry.lengths),
            "eps": self.epsilon,
            "delta": self.delta,
            "centered": self.centered,
            "branches": list(self.branches) if self.branches else None,
            "n_samples": self.n_samples,
            "grid_N": self.grid.size,
            "mean": self.mean,
            "std_error": self.std_error,
        }


class CouplingWeights(BaseModel):
    """Self couplings g_k and symmetric cross couplings g_kl of a starburst."""

    model_config = ConfigDict(frozen=True)

    g_self: tuple[float, ...]
    g_cross: tuple[tuple[float, ...], ...]

    @field_validator("g_self")
    @classmethod
    def _nonnegative_self(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if any(g < 0 for g in value):
            raise ValueError("self couplings must be non-negative")
        return value

    @model_validator(mode="after")
    def _square_symmetric(self) -> "CouplingWeights":
        n = len(self.g_self)
        cross = np.asarray(self.g_cross, dtype=float)
        if cross.shape != (n, n):
            raise ValueError(f"g_cross must be {n}x{n}")
        off = ~np.eye(n, dtype=bool)
        if np.any(cross[off] < 0):
            raise ValueError("cross couplings must be non-negative")
        if not np.array_equal(cross[off], cross.T[off]):
            raise ValueError("cross couplings must be symmetric")
        return self

    @property
    def n_branches(self) -> int:
        return len(self.g_self)

    @classmethod
    def shared_cross(
        cls, g_self: Sequence[float], g_cross: float
    ) -> "CouplingWeights":
        """Per-branch self couplings with one coupling for every pair of branches."""
        n = len(g_self)
        rows = tuple(
            tuple(0.0 if k == l else g_cross for l in range(n)) for k in range(n)
        )
        return cls(g_self=tuple(g_self), g_cross=rows)

    @classmethod
    def uniform(
        cls, n_branches: int, g_self: float, g_cross: float
    ) -> "CouplingWeights":
        return cls.shared_cross((g_self,) * n_branches, g_cross)

    def scaled(self, factor: float) -> "CouplingWeights":
        return CouplingWeights(
            g_self=tuple(factor * g for g in self.g_self),
            g_cross=tuple(tuple(factor * g for g in row) for row in self.g_cross),
        )


class ObservableEstimate(BaseModel):
    """Raw and self-normalized reweighted mean of one observable."""

    model_config = ConfigDict(frozen=True)

    name: str
    raw: float
    reweighted: float
    std_error: float
    unreliable: bool = False


class EdwardsEstimate(BaseModel):
    """Importance weights exp(-g L) over an ensemble and derived statistics."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    g: Union[float, CouplingWeights]
    normalizer: float
    normalizer_stderr: float
    log_shift: float = Field(
        ..., description="max of -g L; raw weights = exp(shift) * scaled"
    )
    scaled_weights: np.ndarray = Field(exclude=True)
    weights: np.ndarray = Field(exclude=True)
    ess: float
    observables: dict[str, ObservableEstimate] = Field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return int(self.weights.size)

    def with_observable(self, estimate: ObservableEstimate) -> "EdwardsEstimate":
        return self.model_copy(
            update={"observables": {**self.observables, estimate.name: estimate}}
        )

    def record(self) -> dict:
        g = self.g.model_dump() if isinstance(self.g, CouplingWeights) else self.g
        return {
            "g": g,
            "normalizer": self.normalizer,
            "normalizer_stderr": self.normalizer_stderr,
            "ess": self.ess,
            "n_samples": self.n_samples,
            "observables": {
                name: obs.model_dump(exclude={"name"})
                for name, obs in self.observables.items()
            },
        }


class StabilityPoint(BaseModel):
    """Edwards reweighting diagnostics at one coupling."""

    g: float
    finite: bool
    normalizer: Optional[float] = None
    ess: Optional[float] = None
    stable: bool


class StabilityScan(BaseModel):
    """Couplings for which exp(-g L) stays finite with enough effective samples."""

    n_samples: int
    ess_fraction: float
    points: list[StabilityPoint]

    @property
    def stable_g(self) -> list[float]:
        return [point.g for point in self.points if point.stable]

    @property
    def g_max(self) -> Optional[float]:
        """Largest g such that every scanned coupling up to it is stable."""
        best = None
        for point in sorted(self.points, key=lambda p: p.g):
            if not point.stable:
                break
            best = point.g
        return best

    def record(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "ess_fraction": self.ess_fraction,
            "g_max": self.g_max,
            "stable_g": self.stable_g,
            "points": [point.model_dump() for point in self.points],
        }
