"""
Edwards polymer measure as importance reweighting of an fBm ensemble.

Weights exp(-g L) are formed in log space and shifted by their maximum so
that sign-indefinite (centered) local times do not overflow.
"""

import math
from typing import Callable, Optional, Sequence, Union

import numpy as np
import structlog

from fbloops.core.config import settings
from fbloops.core.exceptions import DomainError, WeightOverflowError
from fbloops.models.ensemble import PathEnsemble
from fbloops.models.estimates import (
    CouplingWeights,
    EdwardsEstimate,
    LocalTimeEstimate,
    ObservableEstimate,
    StabilityPoint,
    StabilityScan,
)
from fbloops.simulation.starburst import combined_local_time

logger = structlog.get_logger(__name__)

Coupling = Union[float, CouplingWeights]

# Largest exponent whose exp() is a finite double.
_MAX_LOG = math.log(np.finfo(float).max)


def _log_weights(est: LocalTimeEstimate, g: Coupling) -> np.ndarray:
    if isinstance(g, CouplingWeights):
        if est.quantity != "L_combined":
            raise DomainError(
                "coupling weights apply to a combined starburst local time",
                details={"quantity": est.quantity},
            )
        return -est.per_path
    if not g >= 0:
        raise DomainError("coupling g must be non-negative", details={"g": g})
    return -float(g) * est.per_path


def edwards_weights(est: LocalTimeEstimate, g: Coupling) -> EdwardsEstimate:
    """
    Importance weights of the Edwards measure over ``est``'s paths.

    For a scalar ``g`` the weight of a path is exp(-g L). For starbursts pass
    the combined local time L(g) together with the CouplingWeights it was
    built from; the weight is then exp(-L(g)).
    """
    if est.n_samples == 0:
        raise DomainError("Edwards weights need at least one path")
    log_w = _log_weights(est, g)
    if not np.all(np.isfinite(log_w)):
        raise DomainError("local-time values must be finite")
    shift = float(np.max(log_w))
    scaled = np.exp(log_w - shift)
    total = float(np.sum(scaled))
    n = est.n_samples
    mean_scaled = total / n
    g_value = float(g) if not isinstance(g, CouplingWeights) else 1.0
    if shift + math.log(mean_scaled) > _MAX_LOG:
        raise WeightOverflowError(magnitude=shift, g=g_value)

    scale = math.exp(shift)
    stderr = float(np.std(scaled, ddof=1)) / math.sqrt(n) if n > 1 else math.nan
    ess = total * total / float(np.sum(scaled * scaled))
    if ess < settings.ESS_WARN:
        logger.warning("weights_unreliable", ess=ess, n_samples=n)
    logger.info("edwards_weights", n_samples=n, log_shift=shift, ess=ess)
    return EdwardsEstimate(
        g=g,
        normalizer=scale * mean_scaled,
        normalizer_stderr=scale * stderr,
        log_shift=shift,
        scaled_weights=scaled,
        weights=scaled / total,
        ess=ess,
    )


def star_edwards_weights(
    ensemble: PathEnsemble,
    weights: CouplingWeights,
    eps: float,
    method: str = "grid",
    threads: Optional[int] = None,
) -> EdwardsEstimate:
    """exp(-L_eps(g)) weights of a starburst ensemble with centered self terms."""
    est = combined_local_time(ensemble, weights, eps, method, threads)
    return edwards_weights(est, weights)


def radius_of_gyration_sq(ensemble: PathEnsemble) -> np.ndarray:
    """Mean squared distance from the centre of mass, under the arc-length measure."""
    m = ensemble.grid.measure_weights()
    m = m / np.sum(m)
    centre = np.einsum("n,snc->sc", m, ensemble.paths)
    spread = ensemble.paths - centre[:, None, :]
    return np.einsum("n,snc,snc->s", m, spread, spread)


def antipodal_displacement_sq(ensemble: PathEnsemble) -> np.ndarray:
    """|b(T/2) - b(0)|^2 of a loop; the grid must contain T/2."""
    grid = ensemble.grid
    if not grid.is_circle:
        raise DomainError("antipodal displacement is defined for loops")
    half = 0.5 * grid.geometry.T
    hits = np.flatnonzero(np.isclose(grid.position, half, rtol=0.0, atol=1e-12 * half))
    if hits.size == 0:
        raise DomainError("grid has no point at T/2", details={"T": grid.geometry.T})
    diff = ensemble.paths[:, hits[0], :] - ensemble.paths[:, 0, :]
    return np.sum(diff * diff, axis=-1)


def end_to_end_sq(ensemble: PathEnsemble, branch: Optional[int] = None) -> np.ndarray:
    """
    |x_k(T_k) - x_k(0)|^2 of a starburst branch.

    Without ``branch`` the value is averaged over all branches.
    """
    grid = ensemble.grid
    if grid.is_circle:
        raise DomainError("end-to-end distances are defined for starbursts")
    n = grid.geometry.n_branches
    branches = range(n) if branch is None else [branch]
    total = np.zeros(ensemble.n_samples)
    for k in branches:
        nodes = grid.branch_nodes(k)
        diff = ensemble.paths[:, nodes[-1], :] - ensemble.paths[:, nodes[0], :]
        total += np.sum(diff * diff, axis=-1)
    return total / len(branches)


OBSERVABLES: dict[str, Callable[[PathEnsemble], np.ndarray]] = {
    "radius_of_gyration_sq": radius_of_gyration_sq,
    "antipodal_displacement_sq": antipodal_displacement_sq,
    "end_to_end_sq": end_to_end_sq,
}


def resolve_observable(name: str) -> Callable[[PathEnsemble], np.ndarray]:
    """Look up a built-in observable; ``end_to_end_sq:k`` selects branch k."""
    base, _, branch = name.partition(":")
    if base not in OBSERVABLES:
        raise DomainError(
            f"unknown observable {name!r}", details={"known": sorted(OBSERVABLES)}
        )
    if branch:
        if base != "end_to_end_sq" or not branch.isdigit():
            raise DomainError(f"invalid observable selector {name!r}")
        return lambda ensemble: end_to_end_sq(ensemble, int(branch))
    return OBSERVABLES[base]


def reweighted_observable(
    ensemble: PathEnsemble,
    ew: EdwardsEstimate,
    obs: Union[str, Callable[[PathEnsemble], np.ndarray]],
    name: Optional[str] = None,
) -> ObservableEstimate:
    """
    Raw and self-normalized importance-sampling means of an observable.

    Both means are sum(w f) / sum(w) over the max-shifted weights (w = 1 for
    the raw mean). The standard error follows the delta method for a ratio
    estimator.
    """
    if ew.n_samples != ensemble.n_samples:
        raise DomainError(
            "weights were computed from a different ensemble",
            details={"weights": ew.n_samples, "ensemble": ensemble.n_samples},
        )
    if isinstance(obs, str):
        func, label = resolve_observable(obs), name or obs
    else:
        func, label = obs, name or getattr(obs, "__name__", "observable")
    values = np.asarray(func(ensemble), dtype=float)
    n = values.size

    w = ew.scaled_weights
    total = float(np.sum(w))
    raw = float(np.sum(values)) / n
    reweighted = float(np.sum(w * values)) / total
    std_error = math.sqrt(float(np.sum((w * (values - reweighted)) ** 2))) / total
    unreliable = ew.ess < settings.ESS_WARN
    if unreliable:
        logger.warning("observable_unreliable", observable=label, ess=ew.ess)
    return ObservableEstimate(
        name=label,
        raw=raw,
        reweighted=reweighted,
        std_error=std_error,
        unreliable=unreliable,
    )


def stability_scan(
    est: LocalTimeEstimate, g_values: Sequence[float], ess_fraction: float = 0.01
) -> StabilityScan:
    """Scan couplings for a finite normalizer with ess >= ess_fraction * n."""
    points = []
    for g in sorted(float(g) for g in g_values):
        try:
            ew = edwards_weights(est, g)
        except WeightOverflowError:
            points.append(StabilityPoint(g=g, finite=False, stable=False))
            continue
        finite = math.isfinite(ew.normalizer)
        points.append(
            StabilityPoint(
                g=g,
                finite=finite,
                normalizer=ew.normalizer if finite else None,
                ess=ew.ess,
                stable=finite and ew.ess >= ess_fraction * est.n_samples,
            )
        )
    scan = StabilityScan(
        n_samples=est.n_samples, ess_fraction=ess_fraction, points=points
    )
    logger.info("stability_scan", g_max=scan.g_max, n_points=len(points))
    return scan
