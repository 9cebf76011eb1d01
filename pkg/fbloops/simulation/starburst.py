"""
Local times of fBm starbursts.

Each branch k is a line fBm on [0, T_k] started at the shared origin, and
points on different branches are at geodesic distance s + t. Branch sums use
trapezoid weights over the branch nodes with the origin included.
"""

import math
from typing import Optional

import numpy as np
import structlog

from fbloops.core.exceptions import DivergenceError, DomainError
from fbloops.models.ensemble import PathEnsemble
from fbloops.models.estimates import CouplingWeights, LocalTimeEstimate
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.simulation.local_time import (
    PairSet,
    check_eps,
    pair_expectation,
    pair_sums,
    shift_estimate,
)
from fbloops.simulation.quadrature import singular_quad

logger = structlog.get_logger(__name__)


def _require_star(grid: Grid) -> None:
    if grid.is_circle:
        raise DomainError("starburst local times need a star grid")


def branch_pairs(spec: KernelSpec, grid: Grid, k: int) -> PairSet:
    """Ordered pairs s_i < s_j on branch ``k``."""
    _require_star(grid)
    nodes = grid.branch_nodes(k)
    w = grid.branch_weights(k)
    a, b = np.triu_indices(nodes.size, k=1)
    gap = grid.position[nodes[b]] - grid.position[nodes[a]]
    return PairSet(
        i=nodes[a],
        j=nodes[b],
        weights=w[a] * w[b],
        variances=np.power(gap, 2.0 * spec.hurst),
    )


def cross_pairs(spec: KernelSpec, grid: Grid, k: int, l: int) -> PairSet:
    """The full rectangle of branch ``k`` nodes against branch ``l`` nodes."""
    _require_star(grid)
    if k == l:
        raise DomainError(
            "cross local time needs two distinct branches",
            details={"k": k, "l": l},
        )
    # Canonical order keeps L_kl and L_lk bit-identical.
    k, l = min(k, l), max(k, l)
    nodes_k, nodes_l = grid.branch_nodes(k), grid.branch_nodes(l)
    w_k, w_l = grid.branch_weights(k), grid.branch_weights(l)
    a, b = np.meshgrid(np.arange(nodes_k.size), np.arange(nodes_l.size), indexing="ij")
    a, b = a.ravel(), b.ravel()
    reach = grid.position[nodes_k[a]] + grid.position[nodes_l[b]]
    return PairSet(
        i=nodes_k[a],
        j=nodes_l[b],
        weights=w_k[a] * w_l[b],
        variances=np.power(reach, 2.0 * spec.hurst),
    )


def cross_local_time(
    ensemble: PathEnsemble, k: int, l: int, eps: float, threads: Optional[int] = None
) -> LocalTimeEstimate:
    """L_kl = int_0^{T_k} ds int_0^{T_l} dt delta_eps(x_k(s) - x_l(t)) per path."""
    check_eps(eps)
    pairs = cross_pairs(ensemble.spec, ensemble.grid, k, l)
    values = pair_sums(ensemble.paths, pairs, [eps], threads)[0]
    return LocalTimeEstimate.from_values(
        values,
        quantity="L_cross",
        epsilon=eps,
        branches=(min(k, l), max(k, l)),
        hurst=ensemble.spec.hurst,
        dim=ensemble.spec.dim,
        grid=ensemble.grid,
    )


def branch_self_local_time(
    ensemble: PathEnsemble, k: int, eps: float, threads: Optional[int] = None
) -> LocalTimeEstimate:
    """Uncentered self-intersection local time of branch ``k``."""
    check_eps(eps)
    pairs = branch_pairs(ensemble.spec, ensemble.grid, k)
    values = pair_sums(ensemble.paths, pairs, [eps], threads)[0]
    return LocalTimeEstimate.from_values(
        values,
        quantity="L_branch",
        epsilon=eps,
        branches=(k,),
        hurst=ensemble.spec.hurst,
        dim=ensemble.spec.dim,
        grid=ensemble.grid,
    )


def branch_self_local_time_centered(
    ensemble: PathEnsemble,
    k: int,
    eps: float,
    method: str = "grid",
    threads: Optional[int] = None,
) -> LocalTimeEstimate:
    """
    L_{k,c} = L_k - E(L_k) on branch ``k``.

    ``method="grid"`` subtracts the exact mean of the discrete sum,
    ``method="quadrature"`` the continuum line-fBm expectation.
    """
    est = branch_self_local_time(ensemble, k, eps, threads)
    spec = ensemble.spec
    if method == "grid":
        pairs = branch_pairs(spec, ensemble.grid, k)
        expectation = pair_expectation(pairs, eps, spec.dim)
    elif method == "quadrature":
        length = spec.geometry.lengths[k]
        expectation = expected_line_local_time(spec.hurst, spec.dim, length, eps)
    else:
        raise DomainError(f"unknown centering method {method!r}")
    return shift_estimate(est, expectation)


def combined_local_time(
    ensemble: PathEnsemble,
    weights: CouplingWeights,
    eps: float,
    method: str = "grid",
    threads: Optional[int] = None,
) -> LocalTimeEstimate:
    """L(g) = sum_k g_k L_{k,c} + sum_{l<k} g_kl L_kl; zero couplings are skipped."""
    _require_star(ensemble.grid)
    n = ensemble.spec.geometry.n_branches
    if weights.n_branches != n:
        raise DomainError(
            f"coupling weights cover {weights.n_branches} branches, star has {n}",
            details={"weights": weights.n_branches, "branches": n},
        )
    check_eps(eps)
    total = np.zeros(ensemble.n_samples)
    for k, g_k in enumerate(weights.g_self):
        if g_k != 0.0:
            centered = branch_self_local_time_centered(
                ensemble, k, eps, method, threads
            )
            total += g_k * centered.per_path
    for k in range(n):
        for l in range(k):
            g_kl = weights.g_cross[k][l]
            if g_kl != 0.0:
                total += g_kl * cross_local_time(ensemble, k, l, eps, threads).per_path
    logger.info(
        "combined_local_time", n_branches=n, eps=eps, n_samples=ensemble.n_samples
    )
    return LocalTimeEstimate.from_values(
        total,
        quantity="L_combined",
        epsilon=eps,
        centered=any(g != 0.0 for g in weights.g_self),
        branches=tuple(range(n)),
        hurst=ensemble.spec.hurst,
        dim=ensemble.spec.dim,
        grid=ensemble.grid,
    )


def expected_line_local_time(h: float, d: int, length: float, eps: float) -> float:
    """
    E(L) of a line fBm on [0, length].

    (2 pi)^{-d/2} int_0^length (length - tau) (tau^{2H} + eps)^{-d/2} d tau; at
    eps = 0 the closed form length^{2-p} (1/(1-p) - 1/(2-p)) with p = dH.
    """
    if eps < 0:
        raise DomainError("eps must be non-negative", details={"eps": eps})
    prefactor = (2.0 * math.pi) ** (-0.5 * d)
    p = h * d
    if eps == 0.0:
        if p >= 1.0:
            raise DivergenceError(
                f"line local time diverges for Hd = {p:g} >= 1",
                details={"hurst": h, "dim": d},
            )
        return prefactor * length ** (2.0 - p) * (1.0 / (1.0 - p) - 1.0 / (2.0 - p))
    return prefactor * singular_quad(
        lambda tau: (length - tau) * (tau ** (2.0 * h) + eps) ** (-0.5 * d), 0.0, length
    )


def expected_cross_local_time(
    h: float, d: int, length_k: float, length_l: float, eps: float
) -> float:
    """
    E(L_kl) = (2 pi)^{-d/2} int int ((s + t)^{2H} + eps)^{-d/2} ds dt.

    Reduced to one dimension with the length of the level set s + t = u,
    m(u) = max(0, min(u, T_k, T_l, T_k + T_l - u)).
    """
    if eps < 0:
        raise DomainError("eps must be non-negative", details={"eps": eps})
    if eps == 0.0 and h * d >= 2.0:
        raise DivergenceError(
            f"cross local time diverges for Hd = {h * d:g} >= 2",
            details={"hurst": h, "dim": d},
        )
    total_length = length_k + length_l

    def integrand(u: float) -> float:
        m = max(0.0, min(u, length_k, length_l, total_length - u))
        return m * (u ** (2.0 * h) + eps) ** (-0.5 * d)

    value = singular_quad(
        integrand, 0.0, total_length, breakpoints=(length_k, length_l)
    )
    return (2.0 * math.pi) ** (-0.5 * d) * value


def expected_cross_local_time_grid(
    spec: KernelSpec, grid: Grid, k: int, l: int, eps: float
) -> float:
    """Exact mean of the discrete L_kl on ``grid``."""
    check_eps(eps)
    return pair_expectation(cross_pairs(spec, grid, k, l), eps, spec.dim)


def expected_branch_local_time_grid(
    spec: KernelSpec, grid: Grid, k: int, eps: float
) -> float:
    """Exact mean of the discrete uncentered branch self local time on ``grid``."""
    check_eps(eps)
    return pair_expectation(branch_pairs(spec, grid, k), eps, spec.dim)
