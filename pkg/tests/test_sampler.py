"""Tests for the dense, circulant and starburst samplers."""

import numpy as np
import pytest

from fbloops.core.exceptions import DomainError, KernelNotPositiveDefiniteError
from fbloops.models.ensemble import PathEnsemble, SeedSpec
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.simulation.kernel_core import increment_variance
from fbloops.simulation.sampler import (
    circulant_eigenvalues,
    closure_residual,
    factorize,
    loop_increments,
    restrict_to_subgrid,
    sample_paths,
)


def test_seed_streams_are_counter_based() -> None:
    """Stream i depends only on the master seed and i."""
    a = SeedSpec(master_seed=9).generator(4).standard_normal(3)
    b = SeedSpec(master_seed=9).generator(4).standard_normal(3)
    c = SeedSpec(master_seed=9).generator(5).standard_normal(3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_circulant_shape_and_origin(loop_ensemble: PathEnsemble) -> None:
    """Paths have shape (n, N, d) and start at the origin."""
    assert loop_ensemble.paths.shape == (300, 32, 2)
    assert loop_ensemble.method == "circulant"
    assert np.all(loop_ensemble.paths[:, 0, :] == 0.0)


def test_circulant_increments_close_the_loop(loop_ensemble: PathEnsemble) -> None:
    """Cyclic increments sum to zero."""
    increments = loop_increments(loop_ensemble)
    assert np.max(np.abs(increments.sum(axis=1))) < 1e-12
    assert closure_residual(loop_ensemble) < 1e-12


def test_circulant_eigenvalues_nonnegative(loop_spec: KernelSpec) -> None:
    """The zero mode is removed and the spectrum is nonnegative for H <= 1/2."""
    eigenvalues = circulant_eigenvalues(loop_spec, 64)
    assert eigenvalues[0] == 0.0
    assert np.all(eigenvalues >= 0.0)


def test_results_independent_of_thread_count(loop_spec: KernelSpec) -> None:
    """Chunked sampling is bit-identical for any worker count."""
    grid = Grid.circle(1.0, 16)
    seed = SeedSpec(master_seed=2)
    one = sample_paths(loop_spec, grid, 600, seed, threads=1)
    many = sample_paths(loop_spec, grid, 600, seed, threads=4)
    assert np.array_equal(one.paths, many.paths)


def test_zero_samples(loop_spec: KernelSpec) -> None:
    """n = 0 gives an empty ensemble."""
    ensemble = sample_paths(loop_spec, Grid.circle(1.0, 8), 0, SeedSpec())
    assert ensemble.paths.shape == (0, 8, 2)
    assert closure_residual(ensemble) == 0.0


def test_dense_sampler_on_nonuniform_grid(loop_spec: KernelSpec) -> None:
    """Non-uniform loop grids fall back to the dense sampler."""
    grid = Grid.from_positions(loop_spec.geometry, np.array([0.0, 0.1, 0.35, 0.5, 0.8]))
    ensemble = sample_paths(loop_spec, grid, 10, SeedSpec(master_seed=1))
    assert ensemble.method == "dense"
    assert np.all(ensemble.paths[:, 0, :] == 0.0)


def test_circulant_rejects_nonuniform_grid(loop_spec: KernelSpec) -> None:
    """Spectral sampling needs equal spacing."""
    grid = Grid.from_positions(loop_spec.geometry, np.array([0.0, 0.1, 0.35]))
    with pytest.raises(DomainError):
        sample_paths(loop_spec, grid, 4, SeedSpec(), method="circulant")


def test_unknown_method(loop_spec: KernelSpec, loop_grid: Grid) -> None:
    """Only auto, circulant and dense are accepted."""
    with pytest.raises(DomainError):
        sample_paths(loop_spec, loop_grid, 4, SeedSpec(), method="fft")


def test_star_branches_share_origin(star_ensemble: PathEnsemble) -> None:
    """Every branch starts at the common origin."""
    assert star_ensemble.method == "dense"
    assert np.all(star_ensemble.paths[:, 0, :] == 0.0)
    assert star_ensemble.paths.shape == (200, 25, 2)


def test_factorize_drops_pinned_rows_and_adds_jitter() -> None:
    """A singular PSD block is factorized after a small ridge."""
    entries = np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
    factor, free = factorize(entries)
    assert list(free) == [1, 2]
    assert factor.shape == (2, 2)
    np.testing.assert_allclose(factor @ factor.T, entries[1:, 1:], atol=1e-5)


def test_factorize_gives_up_on_indefinite_matrix() -> None:
    """Jitter up to JITTER_MAX cannot rescue a negative eigenvalue."""
    entries = np.array([[0.0, 0.0], [0.0, -1.0]])
    with pytest.raises(KernelNotPositiveDefiniteError) as info:
        factorize(entries)
    assert info.value.min_eigenvalue == pytest.approx(-1.0)


def test_restrict_to_subgrid(loop_ensemble: PathEnsemble) -> None:
    """Even-indexed points form an N/2 grid with the same paths."""
    coarse = restrict_to_subgrid(loop_ensemble, 2)
    assert coarse.grid.size == 16
    assert coarse.grid.is_uniform()
    assert np.array_equal(coarse.paths, loop_ensemble.paths[:, ::2, :])


@pytest.mark.slow
def test_increment_variance_matches_kernel(loop_spec: KernelSpec) -> None:
    """Empirical increment variances agree with d^{2H}."""
    grid = Grid.circle(1.0, 32)
    ensemble = sample_paths(loop_spec, grid, 4000, SeedSpec(master_seed=21))
    for i, j in [(0, 5), (3, 16), (10, 30)]:
        diff = ensemble.paths[:, j, :] - ensemble.paths[:, i, :]
        empirical = float(np.mean(diff * diff))
        expected = increment_variance(loop_spec, grid.position[i], grid.position[j])
        assert empirical == pytest.approx(expected, rel=0.1)


@pytest.mark.slow
def test_dense_and_circulant_agree(loop_spec: KernelSpec) -> None:
    """Both samplers reproduce the same marginal variance."""
    grid = Grid.circle(1.0, 16)
    dense = sample_paths(loop_spec, grid, 4000, SeedSpec(master_seed=1), method="dense")
    circ = sample_paths(
        loop_spec, grid, 4000, SeedSpec(master_seed=2), method="circulant"
    )
    v_dense = float(np.mean(dense.paths[:, 8, :] ** 2))
    v_circ = float(np.mean(circ.paths[:, 8, :] ** 2))
    assert v_dense == pytest.approx(v_circ, rel=0.1)
