"""Kernel specification, parameter-space geometry and discretization grids."""

from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from fbloops.core.exceptions import DomainError, FormatError

# Construction ops additionally require h <= 1/2; values above are only
# meaningful for diagnostics that expect the kernel to fail.
HurstIndex = Annotated[float, Field(gt=0.0, lt=1.0, description="Hurst index H")]


class CircleGeometry(BaseModel):
    """Circle of circumference T (fBm loop parameter space)."""

    model_config = ConfigDict(frozen=True)

    type: Literal["circle"] = "circle"
    T: float = Field(..., gt=0.0, description="Circumference")


class StarGeometry(BaseModel):
    """Star of n branches joined at a common origin (starburst parameter space)."""

    model_config = ConfigDict(frozen=True)

    type: Literal["star"] = "star"
    lengths: tuple[float, ...] = Field(..., min_length=1, description="Branch lengths")

    @field_validator("lengths")
    @classmethod
    def _positive_lengths(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if any(length <= 0 for length in value):
            raise ValueError("every branch length must be positive")
        return value

    @property
    def n_branches(self) -> int:
        return len(self.lengths)


Geometry = Annotated[Union[CircleGeometry, StarGeometry], Field(discriminator="type")]


class KernelSpec(BaseModel):
    """Geometry, Hurst index and ambient dimension of a Gaussian loop or starburst."""

    model_config = ConfigDict(frozen=True)

    geometry: Geometry
    hurst: HurstIndex
    dim: int = Field(default=1, ge=1, description="Ambient dimension d")

    @property
    def h(self) -> float:
        return self.hurst

    @property
    def d(self) -> int:
        return self.dim

    @property
    def is_circle(self) -> bool:
        return isinstance(self.geometry, CircleGeometry)

    @property
    def hd(self) -> float:
        """Product H*d governing the integrability of the local time."""
        return self.hurst * self.dim

    def require_constructible(self) -> None:
        """Raise unless H lies in the range where the process exists."""
        if self.hurst > 0.5:
            raise DomainError(
                f"H={self.hurst} > 1/2: no Gaussian process with this kernel",
                details={"hurst": self.hurst},
            )

    def to_json(self) -> str:
        return self.model_dump_json()

    @classmethod
    def from_json(cls, document: str) -> "KernelSpec":
        """Parse a JSON kernel specification; malformed documents raise FormatError."""
        try:
            return cls.model_validate_json(document)
        except ValidationError as exc:
            raise FormatError(
                "malformed kernel specification",
                details={"errors": exc.error_count()},
            ) from exc


class Grid(BaseModel):
    """
    Discretization of the parameter space.

    Circle grids hold positions in [0, T) starting at 0. Star grids hold the
    shared origin once at index 0 (labelled branch 0, position 0) followed by
    the points of each branch in increasing arc position.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    geometry: Geometry
    branch: np.ndarray
    position: np.ndarray

    @model_validator(mode="after")
    def _check_points(self) -> "Grid":
        branch = np.array(self.branch, dtype=np.int64)
        position = np.array(self.position, dtype=float)
        if branch.shape != position.shape or position.ndim != 1 or position.size == 0:
            raise ValueError("branch and position must be equal-length 1-D arrays")
        if position[0] != 0.0:
            raise ValueError("grid must start at the origin")
        if isinstance(self.geometry, CircleGeometry):
            if np.any(np.diff(position) <= 0):
                raise ValueError("circle positions must be strictly increasing")
            if position[-1] >= self.geometry.T:
                raise ValueError("circle positions must lie in [0, T)")
        else:
            if np.count_nonzero(position == 0.0) != 1:
                raise ValueError("star origin must appear exactly once")
            for k, length in enumerate(self.geometry.lengths):
                pos_k = position[(branch == k) & (position > 0)]
                if np.any(np.diff(pos_k) <= 0) or np.any(pos_k > length):
                    raise ValueError(f"branch {k} positions invalid")
            if np.any((branch < 0) | (branch >= self.geometry.n_branches)):
                raise ValueError("unknown branch index in grid")
        branch.setflags(write=False)
        position.setflags(write=False)
        object.__setattr__(self, "branch", branch)
        object.__setattr__(self, "position", position)
        return self

    # Constructors

    @classmethod
    def circle(cls, T: float, n_points: int) -> "Grid":
        """Uniform grid of ``n_points`` on a circle of circumference T."""
        if n_points < 1:
            raise DomainError("circle grid needs at least one point")
        position = np.arange(n_points) * (T / n_points)
        return cls(
            geometry=CircleGeometry(T=T),
            branch=np.zeros(n_points, dtype=np.int64),
            position=position,
        )

    @classmethod
    def star(
        cls, lengths: tuple[float, ...] | list[float], n_per_branch: int
    ) -> "Grid":
        """Uniform grid with ``n_per_branch`` points on each branch plus the origin."""
        if n_per_branch < 1:
            raise DomainError("star grid needs at least one point per branch")
        geometry = StarGeometry(lengths=tuple(lengths))
        branches = [np.zeros(1, dtype=np.int64)]
        positions = [np.zeros(1)]
        for k, length in enumerate(geometry.lengths):
            branches.append(np.full(n_per_branch, k, dtype=np.int64))
            positions.append(np.arange(1, n_per_branch + 1) * (length / n_per_branch))
        return cls(
            geometry=geometry,
            branch=np.concatenate(branches),
            position=np.concatenate(positions),
        )

    @classmethod
    def from_positions(
        cls,
        geometry: CircleGeometry | StarGeometry,
        position: np.ndarray,
        branch: Optional[np.ndarray] = None,
    ) -> "Grid":
        """Grid from explicit (possibly non-uniform) positions."""
        position = np.asarray(position, dtype=float)
        if branch is None:
            branch = np.zeros(position.size, dtype=np.int64)
        return cls(
            geometry=geometry,
            branch=np.asarray(branch, dtype=np.int64),
            position=position,
        )

    # Queries

    @property
    def size(self) -> int:
        return int(self.position.size)

    @property
    def is_circle(self) -> bool:
        return isinstance(self.geometry, CircleGeometry)

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        """True for a circle grid of equally spaced points starting at 0."""
        if not self.is_circle:
            return False
        expected = np.arange(self.size) * (self.geometry.T / self.size)
        atol = rtol * self.geometry.T
        return bool(np.allclose(self.position, expected, rtol=0.0, atol=atol))

    def spacing(self) -> np.ndarray:
        """Mean mesh width per branch (one entry for circles)."""
        if self.is_circle:
            return np.array([self.geometry.T / self.size])
        return np.array(
            [
                length / max(1, self.branch_nodes(k).size - 1)
                for k, length in enumerate(self.geometry.lengths)
            ]
        )

    def weights(self) -> np.ndarray:
        """Periodic midpoint quadrature weights of a circle grid."""
        if not self.is_circle:
            raise DomainError("star grids carry per-branch weights; use branch_weights")
        T = self.geometry.T
        ahead = np.append(self.position[1:], T)
        behind = np.insert(self.position[:-1], 0, self.position[-1] - T)
        return 0.5 * (ahead - behind)

    def branch_nodes(self, k: int) -> np.ndarray:
        """Grid indices of branch ``k`` (origin first, increasing arc position)."""
        if self.is_circle:
            raise DomainError("circle grids have no branches")
        if not 0 <= k < self.geometry.n_branches:
            raise DomainError(f"unknown branch index {k}", details={"branch": k})
        members = np.flatnonzero((self.branch == k) & (self.position > 0))
        origin = np.flatnonzero(self.position == 0.0)
        return np.concatenate([origin, members[np.argsort(self.position[members])]])

    def branch_weights(self, k: int) -> np.ndarray:
        """Trapezoid weights on ``[0, T_k]`` over ``branch_nodes(k)``."""
        nodes = self.position[self.branch_nodes(k)]
        length = self.geometry.lengths[k]
        w = np.zeros(nodes.size)
        if nodes.size > 1:
            gaps = np.diff(nodes)
            w[:-1] += 0.5 * gaps
            w[1:] += 0.5 * gaps
        # Uncovered tail up to the branch end goes to the last node.
        w[-1] += length - nodes[-1]
        return w

    def measure_weights(self) -> np.ndarray:
        """Weights integrating over the whole parameter space (origin counted once)."""
        if self.is_circle:
            return self.weights()
        w = np.zeros(self.size)
        for k in range(self.geometry.n_branches):
            np.add.at(w, self.branch_nodes(k), self.branch_weights(k))
        return w

    def subgrid(self, step: int) -> tuple["Grid", np.ndarray]:
        """Every ``step``-th point of a circle grid, and the selected indices."""
        if not self.is_circle:
            raise DomainError("subgrids are defined for circle grids")
        index = np.arange(0, self.size, step)
        return Grid.from_positions(self.geometry, self.position[index]), index

    def points(self) -> list:
        """Grid points as kernel_core arguments: floats (circle) or (k, s) pairs."""
        if self.is_circle:
            return [float(t) for t in self.position]
        return [(int(k), float(s)) for k, s in zip(self.branch, self.position)]


class CovarianceMatrix(BaseModel):
    """Dense Gram matrix of the scalar field on a grid; read-only."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: np.ndarray
    spec: KernelSpec

    @model_validator(mode="after")
    def _freeze(self) -> "CovarianceMatrix":
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("covariance matrix must be square")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        return self

    @property
    def size(self) -> int:
        return int(self.entries.shape[0])
