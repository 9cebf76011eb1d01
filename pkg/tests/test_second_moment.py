"""Tests for the second moment of the near-diagonal local time."""

import numpy as np
import pytest

from fbloops.core.exceptions import DomainError
from fbloops.models.ensemble import SeedSpec
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.simulation.local_time import (
    circle_pairs,
    expected_L_eps_analytic,
    expected_L_eps_grid,
    local_time,
    second_moment_analytic,
    second_moment_grid,
)
from fbloops.simulation.sampler import sample_paths


def test_grid_second_moment_exceeds_squared_mean(loop_spec: KernelSpec) -> None:
    """E(Lambda^2) >= E(Lambda)^2 for the discrete estimator."""
    grid = Grid.circle(1.0, 16)
    second = second_moment_grid(loop_spec, grid, 0.05, 0.25)
    mean = expected_L_eps_grid(loop_spec, grid, 0.05, "lambda", 0.25)
    assert second > mean * mean > 0.0


def test_grid_second_moment_rejects_bad_eps(loop_spec: KernelSpec) -> None:
    """eps must be positive."""
    with pytest.raises(DomainError):
        second_moment_grid(loop_spec, Grid.circle(1.0, 8), 0.0, 0.25)


def test_analytic_rejects_nonconstructible_kernel() -> None:
    """H > 1/2 has no Gaussian process behind it."""
    spec = KernelSpec(geometry={"type": "circle", "T": 1.0}, hurst=0.7, dim=2)
    with pytest.raises(DomainError):
        second_moment_analytic(spec, 0.05, 0.25)


def test_analytic_rejects_star(star_spec: KernelSpec) -> None:
    """The loop second moment needs a circle."""
    with pytest.raises(DomainError):
        second_moment_analytic(star_spec, 0.05, 0.25)


def test_analytic_rejects_bad_delta(loop_spec: KernelSpec) -> None:
    """delta must lie in (0, T/2]."""
    with pytest.raises(DomainError):
        second_moment_analytic(loop_spec, 0.05, 0.75)


@pytest.mark.slow
def test_analytic_second_moment_exceeds_squared_mean(loop_spec: KernelSpec) -> None:
    """The continuum value respects Jensen's inequality."""
    second = second_moment_analytic(loop_spec, 0.05, 0.25, rtol=1e-3)
    mean = expected_L_eps_analytic(loop_spec, 0.05, "lambda", 0.25)
    assert second > mean * mean


@pytest.mark.slow
def test_grid_second_moment_is_monte_carlo_mean(loop_spec: KernelSpec) -> None:
    """The MC mean of Lambda_eps^2 matches the exact discrete second moment."""
    grid = Grid.circle(1.0, 16)
    ensemble = sample_paths(loop_spec, grid, 4000, SeedSpec(master_seed=17))
    squares = local_time(ensemble, 0.05, "lambda", 0.25).per_path ** 2
    mean = float(np.mean(squares))
    std_error = float(np.std(squares, ddof=1)) / np.sqrt(squares.size)
    assert abs(mean - second_moment_grid(loop_spec, grid, 0.05, 0.25)) < 4.0 * std_error


def test_lambda_at_half_period_is_full_local_time(
    loop_spec: KernelSpec, loop_ensemble
) -> None:
    """At delta = T/2 the near region holds every pair."""
    near = circle_pairs(loop_spec, loop_ensemble.grid, "lambda", 0.5)
    full = circle_pairs(loop_spec, loop_ensemble.grid, "full")
    np.testing.assert_array_equal(near.i, full.i)
    np.testing.assert_array_equal(near.j, full.j)
    lam = local_time(loop_ensemble, 0.05, "lambda", 0.5).per_path
    np.testing.assert_array_equal(lam, local_time(loop_ensemble, 0.05).per_path)


@pytest.mark.parametrize("eps", [0.01, 0.05])
def test_grid_second_moment_increases_with_delta(
    loop_spec: KernelSpec, eps: float
) -> None:
    """Widening the gap window only adds pairs, so E(Lambda^2) grows with delta."""
    grid = Grid.circle(1.0, 32)
    values = [
        second_moment_grid(loop_spec, grid, eps, delta)
        for delta in (0.05, 0.1, 0.25, 0.4, 0.5)
    ]
    assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_analytic_second_moment_increases_with_delta(loop_spec: KernelSpec) -> None:
    """The continuum second moment is non-decreasing in delta up to T/2."""
    values = [
        second_moment_analytic(loop_spec, 0.05, delta, rtol=1e-3)
        for delta in (0.1, 0.25, 0.5)
    ]
    assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.slow
def test_grid_second_moment_at_half_period_matches_full(loop_spec: KernelSpec) -> None:
    """With delta = T/2 the grid rule is the second moment of the full local time."""
    grid = Grid.circle(1.0, 16)
    ensemble = sample_paths(loop_spec, grid, 4000, SeedSpec(master_seed=23))
    squares = local_time(ensemble, 0.05).per_path ** 2
    mean = float(np.mean(squares))
    std_error = float(np.std(squares, ddof=1)) / np.sqrt(squares.size)
    assert abs(mean - second_moment_grid(loop_spec, grid, 0.05, 0.5)) < 4.0 * std_error
