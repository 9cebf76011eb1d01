"""
Geodesic distances and covariance kernels of fBm loops and starbursts.

Points are floats ``t`` on a circle and ``(k, s)`` pairs on a star. The
scalar field is pinned at the origin and its covariance is defined by
polarization of the increment variance d^{2H}.
"""

from typing import Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict
from scipy import linalg

from fbloops.core.config import settings
from fbloops.core.exceptions import DomainError, NumericError, ResourceError
from fbloops.models.kernel import (
    CircleGeometry,
    CovarianceMatrix,
    Grid,
    KernelSpec,
    StarGeometry,
)

logger = structlog.get_logger(__name__)

Point = Union[float, tuple[int, float]]


class PDCheck(BaseModel):
    """Outcome of a positive-definiteness test."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    pd: bool
    min_eigenvalue: float
    max_eigenvalue: float
    witness: Optional[np.ndarray] = None


def geodesic_circle(s, t, T: float):
    """Arc distance min(|s-t|, T-|s-t|) for s, t in [0, T]; accepts arrays."""
    if T <= 0:
        raise DomainError("circumference must be positive", details={"T": T})
    s_arr = np.asarray(s, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    for name, arr in (("s", s_arr), ("t", t_arr)):
        if not np.all((arr >= 0) & (arr <= T)):
            raise DomainError(f"{name} outside [0, T]", details={"T": T})
    diff = np.abs(s_arr - t_arr)
    out = np.minimum(diff, T - diff)
    return float(out) if out.ndim == 0 else out


def geodesic_star(k, s, l, t, geometry: StarGeometry):
    """|s-t| on a common branch, s+t through the origin otherwise; accepts arrays."""
    k_arr = np.asarray(k)
    l_arr = np.asarray(l)
    n = geometry.n_branches
    if np.any((k_arr < 0) | (k_arr >= n)) or np.any((l_arr < 0) | (l_arr >= n)):
        raise DomainError("unknown branch index", details={"n_branches": n})
    lengths = np.asarray(geometry.lengths)
    s_arr = np.asarray(s, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    if np.any((s_arr < 0) | (s_arr > lengths[k_arr])) or np.any(
        (t_arr < 0) | (t_arr > lengths[l_arr])
    ):
        raise DomainError("arc position outside its branch")
    out = np.where(k_arr == l_arr, np.abs(s_arr - t_arr), s_arr + t_arr)
    return float(out) if out.ndim == 0 else out


def _split_points(spec: KernelSpec, points) -> tuple[np.ndarray, np.ndarray]:
    """Branch and position arrays for a point or sequence of points."""
    if spec.is_circle:
        pos = np.asarray(points, dtype=float)
        return np.zeros(pos.shape, dtype=np.int64), pos
    arr = np.asarray(points, dtype=float)
    if arr.shape[-1:] != (2,):
        raise DomainError("star points must be (branch, position) pairs")
    return arr[..., 0].astype(np.int64), arr[..., 1]


def distance(spec: KernelSpec, p, q):
    """Geodesic distance between points (or arrays of points) of ``spec``'s geometry."""
    kp, sp = _split_points(spec, p)
    kq, sq = _split_points(spec, q)
    if spec.is_circle:
        return geodesic_circle(sp, sq, spec.geometry.T)
    return geodesic_star(kp, sp, kq, sq, spec.geometry)


def increment_variance(spec: KernelSpec, p: Point, q: Point):
    """E((b(p) - b(q))^2) = geodesic(p, q)^{2H}."""
    return np.power(distance(spec, p, q), 2.0 * spec.hurst)


def _origin_like(spec: KernelSpec, p):
    kp, _ = _split_points(spec, p)
    if spec.is_circle:
        return np.zeros(kp.shape)
    return np.stack([kp, np.zeros(kp.shape)], axis=-1)


def covariance(spec: KernelSpec, p: Point, q: Point):
    """R(p, q) = 1/2 (d^{2H}(p, 0) + d^{2H}(q, 0) - d^{2H}(p, q))."""
    a = increment_variance(spec, p, _origin_like(spec, p))
    b = increment_variance(spec, q, _origin_like(spec, q))
    out = 0.5 * (a + b - increment_variance(spec, p, q))
    return float(out) if np.ndim(out) == 0 else out


def _check_grid(spec: KernelSpec, grid: Grid) -> None:
    if spec.geometry != grid.geometry:
        raise DomainError(
            "grid is not compatible with the kernel geometry",
            details={
                "kernel": spec.geometry.model_dump(),
                "grid": grid.geometry.model_dump(),
            },
        )


def distance_matrix(spec: KernelSpec, grid: Grid) -> np.ndarray:
    """Pairwise geodesic distances over a grid; exactly symmetric."""
    _check_grid(spec, grid)
    pos = grid.position
    diff = np.abs(pos[:, None] - pos[None, :])
    if isinstance(spec.geometry, CircleGeometry):
        return np.minimum(diff, spec.geometry.T - diff)
    same = grid.branch[:, None] == grid.branch[None, :]
    return np.where(same, diff, pos[:, None] + pos[None, :])


def build_cov_matrix(spec: KernelSpec, grid: Grid) -> CovarianceMatrix:
    """Covariance matrix R(p_i, p_j) over all grid points."""
    _check_grid(spec, grid)
    n = grid.size
    needed = 3 * n * n * 8
    if needed > settings.MAX_MATRIX_BYTES:
        raise ResourceError(
            f"covariance matrix for {n} points needs {needed} bytes",
            details={"n_points": n, "limit": settings.MAX_MATRIX_BYTES},
        )
    variances = np.power(distance_matrix(spec, grid), 2.0 * spec.hurst)
    # Row 0 is the origin, so a[0] == 0 and R's origin row is exactly zero.
    a = variances[0]
    entries = 0.5 * (a[:, None] + a[None, :] - variances)
    logger.debug("covariance_built", n_points=n, hurst=spec.hurst)
    return CovarianceMatrix(entries=entries, spec=spec)


def check_positive_definite(
    m: CovarianceMatrix, tol: Optional[float] = None
) -> PDCheck:
    """
    Positive (semi)definiteness up to ``tol`` relative to the largest eigenvalue.

    ``pd`` holds when lambda_min >= -tol * lambda_max. Otherwise ``witness`` is
    the eigenvector of lambda_min, which has a negative Rayleigh quotient.
    """
    tol = settings.PD_TOLERANCE if tol is None else tol
    entries = np.asarray(m.entries)
    try:
        eigenvalues, eigenvectors = linalg.eigh(entries)
    except linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver did not converge: {exc}") from exc
    lam_min = float(eigenvalues[0])
    lam_max = float(eigenvalues[-1])
    pd = lam_min >= -tol * max(lam_max, 0.0)
    witness = None if pd else eigenvectors[:, 0].copy()
    logger.debug("pd_checked", pd=pd, min_eigenvalue=lam_min, max_eigenvalue=lam_max)
    return PDCheck(
        pd=pd, min_eigenvalue=lam_min, max_eigenvalue=lam_max, witness=witness
    )


def increment_cross_covariance(
    spec: KernelSpec, s: Point, t: Point, s2: Point, t2: Point
):
    """
    mu = E((b(s) - b(t)) (b(s2) - b(t2)))
       = 1/2 (d^{2H}(s, t2) + d^{2H}(s2, t) - d^{2H}(t, t2) - d^{2H}(s, s2)).

    For (s2, t2) == (s, t) this is exactly increment_variance(s, t).
    """
    out = 0.5 * (
        increment_variance(spec, s, t2)
        + increment_variance(spec, s2, t)
        - increment_variance(spec, t, t2)
        - increment_variance(spec, s, s2)
    )
    return float(out) if np.ndim(out) == 0 else out


def lnd_constant(spec: KernelSpec, times: Sequence[Point]) -> float:
    """
    Tight local-nondeterminism constant for ``0 < t_1 < ... < t_n``.

    Returns the smallest eigenvalue of D^{-1/2} C D^{-1/2}, with C the Gram
    matrix of the increments b(t_i) - b(t_{i-1}) and D its diagonal.
    """
    spec.require_constructible()
    if len(times) < 2:
        raise DomainError("need at least two times")
    branch, pos = _split_points(spec, list(times))
    if np.any(np.diff(pos) <= 0):
        raise DomainError(
            "times must be strictly increasing", details={"times": pos.tolist()}
        )
    if not spec.is_circle and np.any(branch != branch[0]):
        raise DomainError("times must lie on a single branch")
    points = np.asarray(times, dtype=float)
    ends, starts = points[1:], points[:-1]
    gram = increment_cross_covariance(
        spec,
        ends[:, None] if spec.is_circle else ends[:, None, :],
        starts[:, None] if spec.is_circle else starts[:, None, :],
        ends[None, :] if spec.is_circle else ends[None, :, :],
        starts[None, :] if spec.is_circle else starts[None, :, :],
    )
    gram = np.atleast_2d(gram)
    diag = np.diag(gram).copy()
    if np.any(diag <= 0):
        raise DomainError(
            "singular increment variances", details={"diagonal": diag.tolist()}
        )
    normalized = gram / np.sqrt(np.outer(diag, diag))
    try:
        k = float(linalg.eigvalsh(normalized)[0])
    except linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver did not converge: {exc}") from exc
    logger.debug("lnd_constant", n_times=len(times), k=k)
    return k
