"""
Regularized self-intersection local time of fBm loops.

L_eps = sum over ordered grid pairs s_i < t_j of w_i w_j delta_eps(b(t_j) - b(s_i)),
with delta_eps the heat kernel. The diagonal i == j is excluded, matching
the open region 0 < s < t < T. Expectations come in two flavours: the
continuum integral (``*_analytic``) and the same integrand summed with the
estimator's own weights (``*_grid``), which is the exact mean of the
discrete estimator.
"""

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
import structlog

from fbloops.core.config import settings
from fbloops.core.exceptions import DivergenceError, DomainError, QuadratureError
from fbloops.core.parallel import map_chunks
from fbloops.models.ensemble import PathEnsemble
from fbloops.models.estimates import LocalTimeEstimate
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.simulation.kernel_core import build_cov_matrix, distance_matrix
from fbloops.simulation.quadrature import (
    composite_gauss,
    graded_fractions,
    singular_quad,
)

logger = structlog.get_logger(__name__)

REGION_QUANTITY = {"full": "L", "lambda": "Lambda", "gamma": "Gamma"}
QUANTITY_REGION = {quantity: region for region, quantity in REGION_QUANTITY.items()}

# Pair-difference tensors are processed in slabs of at most this many floats.
_SLAB = 4_000_000


class PairSet(NamedTuple):
    """Ordered grid pairs (i < j) with product weights and kernel variances."""

    i: np.ndarray
    j: np.ndarray
    weights: np.ndarray
    variances: np.ndarray


class GapSplit(NamedTuple):
    gamma: float
    lambda_: float


class Extrapolation(NamedTuple):
    value: float
    residual: float
    order: int


def heat_kernel(x, eps: float):
    """delta_eps(x) = (2 pi eps)^{-d/2} exp(-|x|^2 / (2 eps)) over the last axis."""
    check_eps(eps)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[-1]
    norm = (2.0 * math.pi * eps) ** (-0.5 * d)
    out = norm * np.exp(-np.sum(x * x, axis=-1) / (2.0 * eps))
    return float(out) if np.ndim(out) == 0 else out


def check_eps(eps: float) -> None:
    if not eps > 0:
        raise DomainError("regularization eps must be positive", details={"eps": eps})


def _check_delta(delta: Optional[float], T: float) -> float:
    if delta is None or not 0 < delta <= 0.5 * T:
        raise DomainError(
            "gap delta must lie in (0, T/2]", details={"delta": delta, "T": T}
        )
    return float(delta)


def _region_mask(
    dist: np.ndarray, region: str, delta: Optional[float], T: float
) -> np.ndarray:
    if region == "full":
        return np.ones(dist.shape, dtype=bool)
    delta = _check_delta(delta, T)
    # At the largest gap every pair belongs to Lambda; d == T/2 has measure zero.
    near = np.ones(dist.shape, dtype=bool) if delta >= 0.5 * T else dist < delta
    if region == "lambda":
        return near
    if region == "gamma":
        return ~near
    raise DomainError(f"unknown region {region!r}")


def circle_pairs(
    spec: KernelSpec, grid: Grid, region: str = "full", delta: Optional[float] = None
) -> PairSet:
    """Ordered pairs of a circle grid restricted to a gap region."""
    if not grid.is_circle:
        raise DomainError("self-intersection local time needs a circle grid")
    if grid.size < 2:
        raise DomainError("local time needs at least two grid points")
    dist = distance_matrix(spec, grid)
    i, j = np.triu_indices(grid.size, k=1)
    pair_dist = dist[i, j]
    keep = _region_mask(pair_dist, region, delta, grid.geometry.T)
    w = grid.weights()
    return PairSet(
        i=i[keep],
        j=j[keep],
        weights=w[i[keep]] * w[j[keep]],
        variances=np.power(pair_dist[keep], 2.0 * spec.hurst),
    )


def pair_sums(
    paths: np.ndarray,
    pairs: PairSet,
    eps_values: Sequence[float],
    threads: Optional[int] = None,
) -> np.ndarray:
    """
    sum_p w_p delta_eps(x_{i_p} - x_{j_p}) for every path and every eps.

    Squared pair distances are computed once and reused across the eps values.

    Returns:
        np.ndarray: shape (len(eps_values), n_paths)
    """
    eps_values = [float(e) for e in eps_values]
    for eps in eps_values:
        check_eps(eps)
    n_paths, _, d = paths.shape
    n_pairs = pairs.i.size
    norms = np.array([(2.0 * math.pi * eps) ** (-0.5 * d) for eps in eps_values])
    slab = max(1, _SLAB // max(1, n_pairs * d))

    def work(start: int, stop: int) -> np.ndarray:
        out = np.empty((len(eps_values), stop - start))
        for lo in range(start, stop, slab):
            hi = min(lo + slab, stop)
            diff = paths[lo:hi, pairs.j, :] - paths[lo:hi, pairs.i, :]
            sq = np.einsum("bpc,bpc->bp", diff, diff)
            for e, eps in enumerate(eps_values):
                kernel = np.exp(-sq / (2.0 * eps))
                out[e, lo - start : hi - start] = norms[e] * (kernel @ pairs.weights)
        return out

    chunks = map_chunks(work, n_paths, threads)
    if not chunks:
        return np.zeros((len(eps_values), 0))
    return np.concatenate(chunks, axis=1)


def local_time_path(
    path: np.ndarray, grid: Grid, eps: float, spec: Optional[KernelSpec] = None
) -> float:
    """L_eps of a single path of shape (n_points, d) on a circle grid."""
    path = np.asarray(path, dtype=float)
    spec = spec or _spec_for(grid, path.shape[-1])
    pairs = circle_pairs(spec, grid)
    return float(pair_sums(path[None], pairs, [eps], threads=1)[0, 0])


def local_time_gap_split(
    path: np.ndarray,
    grid: Grid,
    eps: float,
    delta: float,
    spec: Optional[KernelSpec] = None,
) -> GapSplit:
    """Split L_eps into Gamma (geodesic gap >= delta) and Lambda (gap < delta)."""
    path = np.asarray(path, dtype=float)
    spec = spec or _spec_for(grid, path.shape[-1])
    _check_delta(delta, grid.geometry.T)
    far = circle_pairs(spec, grid, "gamma", delta)
    near = circle_pairs(spec, grid, "lambda", delta)
    gamma = pair_sums(path[None], far, [eps], threads=1)
    lam = pair_sums(path[None], near, [eps], threads=1)
    return GapSplit(gamma=float(gamma[0, 0]), lambda_=float(lam[0, 0]))


def _spec_for(grid: Grid, d: int) -> KernelSpec:
    # Pair weights and distances do not depend on H; any admissible value serves.
    return KernelSpec(geometry=grid.geometry, hurst=0.5, dim=d)


def local_time_ladder(
    ensemble: PathEnsemble,
    eps_values: Sequence[float],
    region: str = "full",
    delta: Optional[float] = None,
    threads: Optional[int] = None,
) -> list[LocalTimeEstimate]:
    """Local-time estimates of one ensemble at several eps (common random numbers)."""
    pairs = circle_pairs(ensemble.spec, ensemble.grid, region, delta)
    values = pair_sums(ensemble.paths, pairs, eps_values, threads)
    estimates = [
        LocalTimeEstimate.from_values(
            values[e],
            quantity=REGION_QUANTITY[region],
            epsilon=float(eps),
            delta=None if region == "full" else delta,
            hurst=ensemble.spec.hurst,
            dim=ensemble.spec.dim,
            grid=ensemble.grid,
        )
        for e, eps in enumerate(eps_values)
    ]
    logger.info(
        "local_time_computed",
        quantity=REGION_QUANTITY[region],
        n_samples=ensemble.n_samples,
        eps=list(map(float, eps_values)),
    )
    return estimates


def local_time(
    ensemble: PathEnsemble,
    eps: float,
    region: str = "full",
    delta: Optional[float] = None,
    threads: Optional[int] = None,
) -> LocalTimeEstimate:
    """Per-path L_eps (or Lambda_eps / Gamma_eps) over an ensemble."""
    return local_time_ladder(ensemble, [eps], region, delta, threads)[0]


def _mean_integrand(spec: KernelSpec, eps: float):
    half_d = 0.5 * spec.dim
    two_h = 2.0 * spec.hurst
    return lambda tau: (tau**two_h + eps) ** (-half_d)


def _power_integral(a: float, b: float, p: float) -> float:
    """int_a^b tau^{-p} d tau, infinite when a == 0 and p >= 1."""
    if a == 0.0 and p >= 1.0:
        return math.inf
    if p == 1.0:
        return math.log(b / a)
    return (b ** (1.0 - p) - a ** (1.0 - p)) / (1.0 - p)


def expected_L_eps_analytic(
    spec: KernelSpec,
    eps: float,
    region: str = "full",
    delta: Optional[float] = None,
) -> float:
    """
    E(L_eps) = (2 pi)^{-d/2} int_0^T (T - tau) (d(tau)^{2H} + eps)^{-d/2} d tau.

    Folding tau -> T - tau turns this into T (2 pi)^{-d/2} int_0^{T/2} (...),
    and the gap regions into the sub-ranges [0, delta) and [delta, T/2].
    At eps = 0 the closed form T (2 pi)^{-d/2} (T/2)^{1-dH} / (1 - dH) is used.
    """
    if not spec.is_circle:
        raise DomainError("expected_L_eps_analytic needs a loop")
    if eps < 0:
        raise DomainError("eps must be non-negative", details={"eps": eps})
    T = spec.geometry.T
    lo, hi = 0.0, 0.5 * T
    if region not in REGION_QUANTITY:
        raise DomainError(f"unknown region {region!r}")
    if region != "full":
        delta = _check_delta(delta, T)
        lo, hi = (0.0, delta) if region == "lambda" else (delta, hi)
    prefactor = T * (2.0 * math.pi) ** (-0.5 * spec.dim)
    if eps == 0.0:
        value = _power_integral(lo, hi, spec.hd) if hi > lo else 0.0
        if math.isinf(value):
            raise DivergenceError(
                f"E(L) diverges for Hd = {spec.hd:g} >= 1",
                details={"hurst": spec.hurst, "dim": spec.dim},
            )
        return prefactor * value
    return prefactor * singular_quad(_mean_integrand(spec, eps), lo, hi)


def expected_L_eps_grid(
    spec: KernelSpec,
    grid: Grid,
    eps: float,
    region: str = "full",
    delta: Optional[float] = None,
) -> float:
    """Exact mean of the discrete estimator: sum_p w_p (2 pi (V_p + eps))^{-d/2}."""
    check_eps(eps)
    return pair_expectation(circle_pairs(spec, grid, region, delta), eps, spec.dim)


def pair_expectation(pairs: PairSet, eps: float, dim: int) -> float:
    """sum_p w_p (2 pi (V_p + eps))^{-d/2}, the Gaussian mean of ``pair_sums``."""
    densities = (2.0 * math.pi * (pairs.variances + eps)) ** (-0.5 * dim)
    return float(np.sum(pairs.weights * densities))


def center(
    est: LocalTimeEstimate, spec: KernelSpec, method: str = "grid"
) -> LocalTimeEstimate:
    """
    L_{eps,c} = L_eps - E(L_eps) on the estimate's own region.

    ``method="grid"`` subtracts the exact mean of the discrete estimator,
    ``method="quadrature"`` the continuum integral.
    """
    if est.centered:
        raise DomainError(
            "estimate is already centered", details={"quantity": est.quantity}
        )
    region = QUANTITY_REGION.get(est.quantity)
    if region is None:
        raise DomainError(
            f"no analytic expectation for {est.quantity!r}",
            details={"quantity": est.quantity},
        )
    if method == "grid":
        expectation = expected_L_eps_grid(
            spec, est.grid, est.epsilon, region, est.delta
        )
    elif method == "quadrature":
        expectation = expected_L_eps_analytic(spec, est.epsilon, region, est.delta)
    else:
        raise DomainError(f"unknown centering method {method!r}")
    return shift_estimate(est, expectation)


def shift_estimate(est: LocalTimeEstimate, expectation: float) -> LocalTimeEstimate:
    """Subtract a constant from every path; the standard error is unchanged."""
    shifted = est.per_path - expectation
    mean = float(np.mean(shifted)) if shifted.size else math.nan
    return est.model_copy(update={"per_path": shifted, "mean": mean, "centered": True})


def extrapolate_to_zero(
    eps_values: Sequence[float], values: Sequence[float], max_order: int = 2
) -> Extrapolation:
    """
    Polynomial (Richardson/Neville) extrapolation of values(eps) to eps = 0.

    Uses the smallest ``max_order + 1`` eps values; the residual is the change
    contributed by the last order.
    """
    eps = np.asarray(eps_values, dtype=float)
    vals = np.asarray(values, dtype=float)
    if eps.size == 0 or eps.size != vals.size:
        raise DomainError("extrapolation needs matching, non-empty eps and value lists")
    order = np.argsort(-eps)
    x, table = eps[order], vals[order].copy()
    m = min(max_order, x.size - 1)
    x, table = x[x.size - m - 1 :], table[table.size - m - 1 :]
    previous = table[-1]
    for k in range(1, m + 1):
        previous = table[-1]
        for i in range(m, k - 1, -1):
            table[i] = table[i] + (table[i] - table[i - 1]) * x[i] / (x[i - k] - x[i])
    residual = float(abs(table[-1] - previous))
    return Extrapolation(value=float(table[-1]), residual=residual, order=m)


def extrapolation_coefficients(
    eps_values: Sequence[float], max_order: int = 2
) -> np.ndarray:
    """
    Lagrange weights c such that sum_i c_i v_i extrapolates v to eps = 0.

    Only the smallest ``max_order + 1`` eps values get non-zero weight, so
    the result matches ``extrapolate_to_zero`` and can be applied per path.
    """
    eps = np.asarray(eps_values, dtype=float)
    if eps.size == 0:
        raise DomainError("extrapolation needs at least one eps value")
    m = min(max_order, eps.size - 1)
    chosen = np.argsort(eps)[: m + 1]
    coefficients = np.zeros(eps.size)
    for i in chosen:
        others = eps[chosen[chosen != i]]
        coefficients[i] = np.prod(others / (others - eps[i]))
    return coefficients


def extrapolate_grid(fine: float, coarse: float, exponent: float) -> float:
    """Remove an h^exponent error term from values on grids of spacing h and 2h."""
    factor = 2.0**exponent
    return (factor * fine - coarse) / (factor - 1.0)


# Second moment of Lambda_eps


def _second_moment_rule(
    spec: KernelSpec, eps: float, delta: float, order: int
) -> float:
    """
    One tensor Gauss-Legendre evaluation of E(Lambda_eps^2).

    Each ordered pair with gap < delta is an arc (start a, length g); rotation
    invariance removes one start, leaving T * int dg int dg' int du over
    g, g' in (0, delta) and the relative offset u in [0, T). The swap
    (g, u, g') -> (g', -u, g) halves the (g, g') square to g' = g v, v in (0, 1).
    """
    T = spec.geometry.T
    two_h = 2.0 * spec.hurst
    g_min = min(delta, max(delta * 2.0**-40, (1e-2 * eps) ** (1.0 / two_h)))
    levels = int(math.ceil(math.log2(delta / g_min))) if g_min < delta else 1

    g_edges = delta * graded_fractions(levels, 2)
    g, w_g = composite_gauss(g_edges[:-1], g_edges[1:], order)
    v_edges = graded_fractions(min(levels, 20), 4)
    v, w_v = composite_gauss(v_edges[:-1], v_edges[1:], order)

    G = np.repeat(g, v.size)
    V = np.tile(v, g.size)
    GP = G * V
    outer_w = 2.0 * np.repeat(w_g * g, v.size) * np.tile(w_v, g.size)

    def power(x: np.ndarray) -> np.ndarray:
        r = np.mod(x, T)
        return np.minimum(r, T - r) ** two_h

    fractions = graded_fractions(6, 6)
    total = 0.0
    rows = max(1, (_SLAB // 4) // (8 * (fractions.size - 1) * order))
    for lo in range(0, G.size, rows):
        g_r, gp_r = G[lo : lo + rows, None], GP[lo : lo + rows, None]
        half = np.full_like(g_r, 0.5 * T)
        kinks = np.mod(
            np.hstack(
                [
                    g_r,
                    -gp_r,
                    g_r - gp_r,
                    half,
                    g_r + half,
                    half - gp_r,
                    g_r - gp_r + half,
                ]
            ),
            T,
        )
        edges = np.sort(
            np.hstack([np.zeros_like(g_r), kinks, np.full_like(g_r, T)]), axis=1
        )
        a, b = edges[:, :-1, None], edges[:, 1:, None]
        sub = a + (b - a) * fractions
        u, w_u = composite_gauss(
            sub[..., :-1].reshape(sub.shape[0], -1),
            sub[..., 1:].reshape(sub.shape[0], -1),
            order,
        )
        lam = g_r**two_h
        rho = gp_r**two_h
        mu = 0.5 * (power(u + gp_r) + power(u - g_r) - power(u + gp_r - g_r) - power(u))
        det = (lam + eps) * (rho + eps) - mu * mu
        inner = np.sum(w_u * det ** (-0.5 * spec.dim), axis=1)
        total += float(np.dot(outer_w[lo : lo + rows], inner))
    return T * (2.0 * math.pi) ** (-spec.dim) * total


def second_moment_analytic(
    spec: KernelSpec,
    eps: float,
    delta: float,
    rtol: Optional[float] = None,
    orders: Sequence[int] = (4, 6, 8, 12),
) -> float:
    """
    E(Lambda_eps^2) = (2 pi)^{-d} int ((lambda + eps)(rho + eps) - mu^2)^{-d/2}.

    The domain is both pairs ordered with geodesic gap < delta; lambda, rho
    are the pair increment variances and mu their cross covariance. The rule
    order is raised until two successive values agree to ``rtol``.
    """
    if not spec.is_circle:
        raise DomainError("second_moment_analytic needs a loop")
    spec.require_constructible()
    check_eps(eps)
    delta = _check_delta(delta, spec.geometry.T)
    rtol = settings.QUAD_RTOL if rtol is None else rtol
    previous = None
    change = math.inf
    for order in orders:
        value = _second_moment_rule(spec, eps, delta, order)
        if previous is not None:
            change = abs(value - previous) / abs(value)
            if change <= rtol:
                logger.info(
                    "quadrature_converged", order=order, value=value, rel_change=change
                )
                return value
        previous = value
    raise QuadratureError(
        f"second moment did not reach rtol={rtol} (last change {change:.2e})",
        achieved_error=change,
    )


def second_moment_grid(spec: KernelSpec, grid: Grid, eps: float, delta: float) -> float:
    """Exact E(Lambda_eps^2) of the discrete estimator on ``grid``."""
    check_eps(eps)
    pairs = circle_pairs(spec, grid, "lambda", delta)
    R = build_cov_matrix(spec, grid).entries
    I, J = pairs.i, pairs.j
    var = pairs.variances + eps
    total = 0.0
    rows = max(1, _SLAB // max(1, I.size))
    for lo in range(0, I.size, rows):
        p = slice(lo, lo + rows)
        mu = (
            R[I[p, None], I[None, :]]
            - R[I[p, None], J[None, :]]
            - R[J[p, None], I[None, :]]
            + R[J[p, None], J[None, :]]
        )
        det = var[p, None] * var[None, :] - mu * mu
        total += float(pairs.weights[p] @ (det ** (-0.5 * spec.dim) @ pairs.weights))
    return (2.0 * math.pi) ** (-spec.dim) * total
