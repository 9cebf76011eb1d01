"""Pytest configuration and shared fixtures."""

import numpy as np
import pytest

from fbloops.models.ensemble import PathEnsemble, SeedSpec
from fbloops.models.estimates import LocalTimeEstimate
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.simulation.sampler import sample_paths


@pytest.fixture
def loop_spec() -> KernelSpec:
    """
    Loop kernel used across the suite.

    Returns:
        KernelSpec: Circle T=1, H=0.25, d=2
    """
    return KernelSpec(geometry={"type": "circle", "T": 1.0}, hurst=0.25, dim=2)


@pytest.fixture
def loop_grid() -> Grid:
    """Uniform 32-point circle grid."""
    return Grid.circle(1.0, 32)


@pytest.fixture
def loop_ensemble(loop_spec: KernelSpec, loop_grid: Grid) -> PathEnsemble:
    """
    Small circulant loop ensemble.

    Returns:
        PathEnsemble: 300 paths on 32 points
    """
    return sample_paths(loop_spec, loop_grid, 300, SeedSpec(master_seed=11))


@pytest.fixture
def star_spec() -> KernelSpec:
    """Three-branch Brownian starburst in the plane."""
    geometry = {"type": "star", "lengths": (1.0, 0.5, 1.0)}
    return KernelSpec(geometry=geometry, hurst=0.5, dim=2)


@pytest.fixture
def star_ensemble(star_spec: KernelSpec) -> PathEnsemble:
    """200 starburst paths with 8 points per branch."""
    grid = Grid.star(star_spec.geometry.lengths, 8)
    return sample_paths(star_spec, grid, 200, SeedSpec(master_seed=5))


@pytest.fixture
def make_estimate(loop_grid: Grid):
    """
    Factory for loop local-time estimates with given per-path values.

    Returns:
        Callable: values -> LocalTimeEstimate
    """

    def factory(
        values, quantity: str = "L", centered: bool = False
    ) -> LocalTimeEstimate:
        return LocalTimeEstimate.from_values(
            np.asarray(values, dtype=float),
            quantity=quantity,
            epsilon=0.01,
            centered=centered,
            hurst=0.25,
            dim=2,
            grid=loop_grid,
        )

    return factory
