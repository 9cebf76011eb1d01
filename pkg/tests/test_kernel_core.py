"""Tests for geodesic distances, covariance kernels and positive definiteness."""

import numpy as np
import pytest

from fbloops.core.exceptions import DomainError, FormatError, ResourceError
from fbloops.core.config import settings
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.simulation.kernel_core import (
    build_cov_matrix,
    check_positive_definite,
    covariance,
    distance,
    geodesic_circle,
    geodesic_star,
    increment_cross_covariance,
    increment_variance,
    lnd_constant,
)


def _loop(hurst: float, T: float = 1.0, dim: int = 1) -> KernelSpec:
    return KernelSpec(geometry={"type": "circle", "T": T}, hurst=hurst, dim=dim)


def test_geodesic_circle_wraps() -> None:
    """Arc distance takes the shorter way round."""
    assert geodesic_circle(0.1, 0.9, 1.0) == pytest.approx(0.2)
    assert geodesic_circle(0.0, 0.5, 1.0) == pytest.approx(0.5)
    assert geodesic_circle(0.3, 0.3, 1.0) == 0.0


def test_geodesic_circle_rejects_points_outside() -> None:
    """Positions beyond [0, T] are out of domain."""
    with pytest.raises(DomainError):
        geodesic_circle(0.2, 1.5, 1.0)


def test_geodesic_star_through_origin(star_spec: KernelSpec) -> None:
    """Points on different branches are s + t apart."""
    assert geodesic_star(0, 0.3, 0, 0.8, star_spec.geometry) == pytest.approx(0.5)
    assert geodesic_star(0, 0.3, 2, 0.4, star_spec.geometry) == pytest.approx(0.7)


def test_geodesic_star_rejects_unknown_branch(star_spec: KernelSpec) -> None:
    """Branch indices are checked."""
    with pytest.raises(DomainError):
        geodesic_star(0, 0.1, 3, 0.1, star_spec.geometry)
    with pytest.raises(DomainError):
        geodesic_star(1, 0.8, 0, 0.1, star_spec.geometry)


def test_covariance_pinned_at_origin() -> None:
    """R(0, t) vanishes and R(t, t) equals d(0, t)^{2H}."""
    spec = _loop(0.3)
    assert covariance(spec, 0.0, 0.4) == 0.0
    assert covariance(spec, 0.25, 0.25) == pytest.approx(0.25**0.6)


def test_kernel_identity_on_random_pairs() -> None:
    """R(s,s) + R(t,t) - 2R(s,t) reproduces the increment variance."""
    spec = _loop(0.35, T=2.0)
    rng = np.random.default_rng(3)
    s, t = rng.uniform(0.0, 2.0, 200), rng.uniform(0.0, 2.0, 200)
    lhs = covariance(spec, s, s) + covariance(spec, t, t) - 2.0 * covariance(spec, s, t)
    expected = increment_variance(spec, s, t)
    np.testing.assert_allclose(lhs, expected, rtol=1e-12, atol=1e-14)


def test_star_branches_independent_at_half(star_spec: KernelSpec) -> None:
    """At H = 1/2 points on different branches are uncorrelated."""
    assert covariance(star_spec, (0, 0.4), (1, 0.3)) == pytest.approx(0.0, abs=1e-15)
    assert covariance(star_spec, (0, 0.4), (0, 0.3)) == pytest.approx(0.3)


def test_distance_accepts_star_arrays(star_spec: KernelSpec) -> None:
    """Vectorized star distances."""
    p = np.array([[0, 0.2], [1, 0.1]])
    q = np.array([[0, 0.5], [2, 0.3]])
    np.testing.assert_allclose(distance(star_spec, p, q), [0.3, 0.4])


def test_cov_matrix_symmetric_with_zero_origin_row(loop_spec: KernelSpec) -> None:
    """The Gram matrix is exactly symmetric and its origin row is zero."""
    m = build_cov_matrix(loop_spec, Grid.circle(1.0, 16))
    assert np.array_equal(m.entries, m.entries.T)
    assert np.all(m.entries[0] == 0.0)
    assert not m.entries.flags.writeable


def test_cov_matrix_rejects_foreign_grid(loop_spec: KernelSpec) -> None:
    """Grid and kernel geometry must agree."""
    with pytest.raises(DomainError):
        build_cov_matrix(loop_spec, Grid.circle(2.0, 8))


def test_cov_matrix_memory_bound(
    loop_spec: KernelSpec, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Allocations above MAX_MATRIX_BYTES raise ResourceError."""
    monkeypatch.setattr(settings, "MAX_MATRIX_BYTES", 1024)
    with pytest.raises(ResourceError):
        build_cov_matrix(loop_spec, Grid.circle(1.0, 64))


@pytest.mark.parametrize("hurst", [0.1, 0.25, 0.4, 0.5])
def test_loop_kernel_positive_definite_up_to_half(hurst: float) -> None:
    """The loop kernel is positive semidefinite for H <= 1/2."""
    m = build_cov_matrix(_loop(hurst), Grid.circle(1.0, 64))
    result = check_positive_definite(m)
    assert result.pd
    assert result.witness is None


def test_loop_kernel_fails_above_half() -> None:
    """H = 0.7 produces a clearly negative eigenvalue and a witness vector."""
    m = build_cov_matrix(_loop(0.7), Grid.circle(1.0, 64))
    result = check_positive_definite(m)
    assert not result.pd
    assert result.min_eigenvalue < -1e-6 * result.max_eigenvalue
    witness = result.witness
    assert witness @ m.entries @ witness < 0.0


@pytest.mark.parametrize("n_points", [16, 64, 256])
@pytest.mark.parametrize("hurst", [0.1, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7])
def test_loop_kernel_pd_boundary(n_points: int, hurst: float) -> None:
    """PD exactly for H <= 1/2 on every grid size; clearly indefinite above."""
    m = build_cov_matrix(_loop(hurst), Grid.circle(1.0, n_points))
    result = check_positive_definite(m, tol=1e-8)
    if hurst <= 0.5:
        assert result.pd
        assert result.min_eigenvalue >= -1e-8 * result.max_eigenvalue
    else:
        assert not result.pd
        assert result.min_eigenvalue < -1e-6 * result.max_eigenvalue


@pytest.mark.parametrize(
    "geometry",
    [{"type": "circle", "T": 2.0}, {"type": "star", "lengths": (1.0, 0.5, 2.0)}],
)
def test_kernel_spec_json_round_trip(geometry: dict) -> None:
    """to_json and from_json reproduce the specification."""
    spec = KernelSpec(geometry=geometry, hurst=0.3, dim=3)
    restored = KernelSpec.from_json(spec.to_json())
    assert restored == spec
    assert restored.geometry.type == geometry["type"]


@pytest.mark.parametrize(
    "document",
    [
        "not json",
        '{"geometry": {"type": "torus", "T": 1.0}, "hurst": 0.3}',
        '{"geometry": {"type": "star", "lengths": [1.0, -1.0]}, "hurst": 0.3}',
        '{"geometry": {"type": "circle", "T": 1.0}, "hurst": 1.5}',
    ],
)
def test_kernel_spec_from_json_rejects_malformed(document: str) -> None:
    """Malformed specifications raise FormatError."""
    with pytest.raises(FormatError):
        KernelSpec.from_json(document)


def test_require_constructible_above_half() -> None:
    """Construction ops refuse H > 1/2."""
    with pytest.raises(DomainError):
        _loop(0.7).require_constructible()


def test_increment_cross_covariance_diagonal() -> None:
    """mu of a pair with itself is its increment variance."""
    spec = _loop(0.25)
    assert increment_cross_covariance(spec, 0.6, 0.1, 0.6, 0.1) == pytest.approx(
        increment_variance(spec, 0.6, 0.1)
    )


def test_lnd_constant_two_times() -> None:
    """A single increment is perfectly nondeterministic."""
    assert lnd_constant(_loop(0.4), [0.1, 0.3]) == pytest.approx(1.0)


def test_lnd_constant_bounded() -> None:
    """The constant lies in (0, 1] for increasing times."""
    k = lnd_constant(_loop(0.4), list(np.linspace(0.05, 0.45, 8)))
    assert 0.0 < k <= 1.0 + 1e-12


def test_lnd_constant_requires_increasing_times() -> None:
    """Times must be strictly increasing."""
    with pytest.raises(DomainError):
        lnd_constant(_loop(0.4), [0.3, 0.1])
