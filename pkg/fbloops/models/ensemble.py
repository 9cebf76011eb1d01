"""Seeds and sampled path ensembles."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from fbloops.models.kernel import Grid, KernelSpec


class SeedSpec(BaseModel):
    """
    Master seed with counter-based per-sample substreams.

    Sample ``i`` always draws from ``Philox`` keyed by
    ``SeedSequence(master_seed, spawn_key=(i,))``, whatever the thread count
    or evaluation order.
    """

    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(default=0, ge=0, lt=2**64)

    def generator(self, index: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.master_seed, spawn_key=(int(index),))
        return np.random.Generator(np.random.Philox(sequence))


class PathEnsemble(BaseModel):
    """``n_samples`` d-dimensional paths sampled on a grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: KernelSpec
    grid: Grid
    paths: np.ndarray
    seed: SeedSpec = Field(default_factory=SeedSpec)
    method: str = Field(default="dense", description="Sampler that produced the paths")

    @model_validator(mode="after")
    def _check_shape(self) -> "PathEnsemble":
        paths = np.asarray(self.paths, dtype=float)
        if paths.ndim != 3:
            raise ValueError("paths must have shape (n_samples, n_points, d)")
        if paths.shape[1] != self.grid.size or paths.shape[2] != self.spec.dim:
            raise ValueError(
                f"paths shape {paths.shape} does not match grid size "
                f"{self.grid.size} and dim {self.spec.dim}"
            )
        if self.spec.geometry != self.grid.geometry:
            raise ValueError("grid geometry differs from kernel geometry")
        paths.setflags(write=False)
        object.__setattr__(self, "paths", paths)
        return self

    @property
    def n_samples(self) -> int:
        return int(self.paths.shape[0])

    @property
    def n_points(self) -> int:
        return int(self.paths.shape[1])
