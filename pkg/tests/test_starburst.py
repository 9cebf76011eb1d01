"""Tests for starburst branch and cross local times."""

import numpy as np
import pytest

from fbloops.core.exceptions import DivergenceError, DomainError
from fbloops.models.ensemble import PathEnsemble
from fbloops.models.estimates import CouplingWeights
from fbloops.models.kernel import KernelSpec
from fbloops.simulation.starburst import (
    branch_pairs,
    branch_self_local_time,
    branch_self_local_time_centered,
    combined_local_time,
    cross_local_time,
    cross_pairs,
    expected_branch_local_time_grid,
    expected_cross_local_time,
    expected_cross_local_time_grid,
    expected_line_local_time,
)


def test_branch_weights_cover_length(star_ensemble: PathEnsemble) -> None:
    """Trapezoid weights of a branch integrate to its length."""
    grid = star_ensemble.grid
    for k, length in enumerate(grid.geometry.lengths):
        assert float(np.sum(grid.branch_weights(k))) == pytest.approx(length)
        assert grid.branch_nodes(k)[0] == 0


def test_cross_pairs_cover_rectangle(
    star_spec: KernelSpec, star_ensemble: PathEnsemble
) -> None:
    """Cross pairs form the full node rectangle including the origin."""
    pairs = cross_pairs(star_spec, star_ensemble.grid, 0, 2)
    assert pairs.i.size == 9 * 9
    assert float(np.sum(pairs.weights)) == pytest.approx(1.0)


def test_branch_pairs_ordered(
    star_spec: KernelSpec, star_ensemble: PathEnsemble
) -> None:
    """Branch pairs have s_i < s_j."""
    pairs = branch_pairs(star_spec, star_ensemble.grid, 1)
    position = star_ensemble.grid.position
    assert pairs.i.size == 36
    assert np.all(position[pairs.i] < position[pairs.j])


def test_cross_same_branch_rejected(star_ensemble: PathEnsemble) -> None:
    """k == l is the branch self local time, not a cross term."""
    with pytest.raises(DomainError):
        cross_local_time(star_ensemble, 1, 1, 0.05)


def test_cross_local_time_symmetric(star_ensemble: PathEnsemble) -> None:
    """L_kl and L_lk are bit-identical."""
    kl = cross_local_time(star_ensemble, 0, 2, 0.05)
    lk = cross_local_time(star_ensemble, 2, 0, 0.05)
    assert np.array_equal(kl.per_path, lk.per_path)
    assert kl.branches == (0, 2)
    assert kl.quantity == "L_cross"


def test_unknown_branch_rejected(star_ensemble: PathEnsemble) -> None:
    """Branch indices are 0-based and bounded."""
    with pytest.raises(DomainError):
        branch_self_local_time(star_ensemble, 3, 0.05)


def test_loop_ensemble_rejected(loop_ensemble: PathEnsemble) -> None:
    """Starburst local times need a star grid."""
    with pytest.raises(DomainError):
        cross_local_time(loop_ensemble, 0, 1, 0.05)


def test_branch_centering_grid(
    star_spec: KernelSpec, star_ensemble: PathEnsemble
) -> None:
    """Grid centering subtracts the exact discrete mean of the branch."""
    raw = branch_self_local_time(star_ensemble, 0, 0.05)
    centered = branch_self_local_time_centered(star_ensemble, 0, 0.05)
    expected = expected_branch_local_time_grid(star_spec, star_ensemble.grid, 0, 0.05)
    assert centered.centered
    np.testing.assert_allclose(centered.per_path, raw.per_path - expected)


def test_branch_centering_quadrature(star_ensemble: PathEnsemble) -> None:
    """Quadrature centering subtracts the continuum line-fBm mean."""
    raw = branch_self_local_time(star_ensemble, 1, 0.05)
    centered = branch_self_local_time_centered(
        star_ensemble, 1, 0.05, method="quadrature"
    )
    shift = expected_line_local_time(0.5, 2, 0.5, 0.05)
    assert centered.mean == pytest.approx(raw.mean - shift)


def test_combined_is_linear_in_cross_couplings(star_ensemble: PathEnsemble) -> None:
    """With zero self couplings L(g) is g times the sum of cross terms."""
    weights = CouplingWeights.uniform(3, 0.0, 0.5)
    combined = combined_local_time(star_ensemble, weights, 0.05)
    pieces = sum(
        cross_local_time(star_ensemble, k, l, 0.05).per_path
        for k, l in [(0, 1), (0, 2), (1, 2)]
    )
    np.testing.assert_allclose(combined.per_path, 0.5 * pieces, rtol=1e-12)
    assert combined.quantity == "L_combined"
    assert not combined.centered


def test_combined_self_terms_are_centered(star_ensemble: PathEnsemble) -> None:
    """Self couplings act on centered branch local times."""
    weights = CouplingWeights(
        g_self=(1.0, 0.0, 2.0), g_cross=((0.0, 0.0, 0.0),) * 3
    )
    combined = combined_local_time(star_ensemble, weights, 0.05)
    expected = (
        branch_self_local_time_centered(star_ensemble, 0, 0.05).per_path
        + 2.0 * branch_self_local_time_centered(star_ensemble, 2, 0.05).per_path
    )
    np.testing.assert_allclose(combined.per_path, expected, rtol=1e-12)
    assert combined.centered


def test_combined_branch_count_mismatch(star_ensemble: PathEnsemble) -> None:
    """Coupling weights must cover every branch."""
    with pytest.raises(DomainError):
        combined_local_time(star_ensemble, CouplingWeights.uniform(2, 1.0, 0.0), 0.05)


def test_coupling_weights_validation() -> None:
    """Cross couplings must be square, symmetric and nonnegative."""
    with pytest.raises(ValueError):
        CouplingWeights(g_self=(1.0, 1.0), g_cross=((0.0, 1.0), (2.0, 0.0)))
    with pytest.raises(ValueError):
        CouplingWeights(g_self=(-1.0,), g_cross=((0.0,),))


def test_line_closed_form() -> None:
    """Unit line at H=0.25, d=2: (2 pi)^{-1} (1/(1-p) - 1/(2-p)) with p = 1/2."""
    value = expected_line_local_time(0.25, 2, 1.0, 0.0)
    assert value == pytest.approx(0.212207, rel=1e-5)


def test_line_quadrature_approaches_closed_form() -> None:
    """Small eps reproduces the eps = 0 closed form."""
    assert expected_line_local_time(0.25, 2, 1.0, 1e-6) == pytest.approx(
        expected_line_local_time(0.25, 2, 1.0, 0.0), rel=1e-3
    )


def test_line_divergence() -> None:
    """The eps = 0 line mean is infinite for Hd >= 1."""
    with pytest.raises(DivergenceError):
        expected_line_local_time(0.5, 2, 1.0, 0.0)


def test_cross_expectation_closed_form() -> None:
    """Unit square at H=0.25, d=2: (2 pi)^{-1} (4/3)(2 sqrt 2 - 2)."""
    assert expected_cross_local_time(0.25, 2, 1.0, 1.0, 0.0) == pytest.approx(
        0.175797, rel=1e-4
    )


def test_cross_expectation_divergence() -> None:
    """The eps = 0 cross mean is infinite for Hd >= 2."""
    with pytest.raises(DivergenceError):
        expected_cross_local_time(0.5, 4, 1.0, 1.0, 0.0)


def test_cross_expectation_symmetric() -> None:
    """Swapping the branch lengths leaves the mean unchanged."""
    a = expected_cross_local_time(0.3, 2, 1.0, 0.5, 0.01)
    b = expected_cross_local_time(0.3, 2, 0.5, 1.0, 0.01)
    assert a == pytest.approx(b, rel=1e-8)


def test_cross_grid_mean_matches_monte_carlo(
    star_spec: KernelSpec, star_ensemble: PathEnsemble
) -> None:
    """The MC mean of L_kl agrees with its grid-rule expectation."""
    est = cross_local_time(star_ensemble, 0, 1, 0.05)
    expected = expected_cross_local_time_grid(star_spec, star_ensemble.grid, 0, 1, 0.05)
    assert abs(est.mean - expected) < 4.0 * est.std_error


def test_branches_independent_at_half(star_ensemble: PathEnsemble) -> None:
    """Coordinates on different branches are uncorrelated at H = 1/2."""
    grid = star_ensemble.grid
    a, b = grid.branch_nodes(0)[-1], grid.branch_nodes(2)[4]
    x, y = star_ensemble.paths[:, a, 0], star_ensemble.paths[:, b, 0]
    products = x * y
    std_error = float(np.std(products, ddof=1)) / np.sqrt(products.size)
    assert abs(float(np.mean(products))) < 4.0 * std_error
