"""Gaussian path samplers for loops and starbursts."""

import math
from typing import Optional

import numpy as np
import structlog
from scipy import linalg

from fbloops.core.config import settings
from fbloops.core.exceptions import (
    DomainError,
    EmbeddingError,
    KernelNotPositiveDefiniteError,
)
from fbloops.core.parallel import map_chunks
from fbloops.models.ensemble import PathEnsemble, SeedSpec
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.simulation.kernel_core import build_cov_matrix

logger = structlog.get_logger(__name__)


def _jitter_ladder() -> list[float]:
    steps = int(round(math.log10(settings.JITTER_MAX / settings.JITTER_START)))
    return [settings.JITTER_START * 10.0**k for k in range(steps + 1)]


def factorize(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Lower Cholesky factor of the covariance restricted to unpinned points.

    Rows that are identically zero (the pinned origin) are dropped. On failure
    a ridge ``jitter * trace / N`` is added, escalating by 10x from
    JITTER_START to JITTER_MAX before giving up.

    Returns:
        tuple: (factor, indices of the unpinned points)
    """
    free = np.flatnonzero(np.any(entries != 0.0, axis=1))
    reduced = entries[np.ix_(free, free)]
    if free.size == 0:
        return np.zeros((0, 0)), free
    try:
        return linalg.cholesky(reduced, lower=True), free
    except linalg.LinAlgError:
        pass

    scale = abs(float(np.trace(reduced))) / free.size or 1.0
    identity = np.eye(free.size)
    for jitter in _jitter_ladder():
        try:
            factor = linalg.cholesky(reduced + jitter * scale * identity, lower=True)
        except linalg.LinAlgError:
            continue
        logger.warning(
            "jitter_added", jitter=jitter, ridge=jitter * scale, n_points=free.size
        )
        return factor, free

    min_eigenvalue = float(linalg.eigvalsh(reduced)[0])
    raise KernelNotPositiveDefiniteError(
        min_eigenvalue, details={"n_points": int(free.size)}
    )


def sample_dense(
    spec: KernelSpec,
    grid: Grid,
    n: int,
    seed: SeedSpec,
    threads: Optional[int] = None,
) -> PathEnsemble:
    """Sample ``n`` paths by Cholesky factorization of the grid covariance."""
    if n < 0:
        raise DomainError("sample count must be non-negative")
    cov = build_cov_matrix(spec, grid)
    factor, free = factorize(cov.entries)
    n_free, d = free.size, spec.dim

    def draw(start: int, stop: int) -> np.ndarray:
        out = np.zeros((stop - start, grid.size, d))
        for row, index in enumerate(range(start, stop)):
            z = seed.generator(index).standard_normal((n_free, d))
            out[row, free] = factor @ z
        return out

    paths = _concat(map_chunks(draw, n, threads), grid.size, d)
    logger.info(
        "ensemble_sampled", method="dense", n_samples=n, n_points=grid.size, dim=d
    )
    return PathEnsemble(spec=spec, grid=grid, paths=paths, seed=seed, method="dense")


def circulant_eigenvalues(spec: KernelSpec, n_points: int) -> np.ndarray:
    """
    Eigenvalues of the circulant covariance of the N increments of a uniform loop.

    The zero-frequency eigenvalue is set to 0, which forces the increments to
    sum to zero (loop closure).
    """
    T = spec.geometry.T
    h = T / n_points
    lags = np.arange(-1, n_points + 1)
    wrapped = np.mod(lags, n_points)
    # Geodesic lag distances are computed on integer lags to stay exact.
    g = (np.minimum(wrapped, n_points - wrapped) * h) ** (2.0 * spec.hurst)
    c = 0.5 * (g[2:] + g[:-2] - 2.0 * g[1:-1])
    eigenvalues = np.fft.fft(c).real
    eigenvalues[0] = 0.0
    top = float(eigenvalues.max(initial=0.0))
    worst = float(eigenvalues.min(initial=0.0))
    if worst < -settings.PD_TOLERANCE * top:
        raise EmbeddingError(
            f"negative circulant eigenvalue {worst:.3e} (max {top:.3e})",
            details={
                "min_eigenvalue": worst,
                "max_eigenvalue": top,
                "hurst": spec.hurst,
            },
        )
    return np.clip(eigenvalues, 0.0, None)


def sample_loop_circulant(
    spec: KernelSpec,
    grid: Grid,
    n: int,
    seed: SeedSpec,
    threads: Optional[int] = None,
) -> PathEnsemble:
    """
    Exact spectral sampling of a loop on a uniform circle grid.

    The increments b(t_{i+1}) - b(t_i) are circularly stationary; they are
    drawn in the Fourier basis of their circulant covariance and cumulated.
    The real and imaginary parts of one complex transform are two independent
    coordinates.
    """
    if n < 0:
        raise DomainError("sample count must be non-negative")
    if not spec.is_circle or not grid.is_circle:
        raise DomainError("circulant sampling needs a loop (circle geometry)")
    if spec.geometry != grid.geometry:
        raise DomainError("grid is not compatible with the kernel geometry")
    if not grid.is_uniform():
        raise DomainError("circulant sampling needs a uniform grid")
    n_points, d = grid.size, spec.dim
    amplitude = np.sqrt(circulant_eigenvalues(spec, n_points) / n_points)
    n_complex = (d + 1) // 2
    columns = _coordinate_order(d)

    def draw(start: int, stop: int) -> np.ndarray:
        out = np.zeros((stop - start, n_points, d))
        for row, index in enumerate(range(start, stop)):
            z = seed.generator(index).standard_normal((2, n_points, n_complex))
            w = np.fft.fft(amplitude[:, None] * (z[0] + 1j * z[1]), axis=0)
            increments = np.concatenate([w.real, w.imag], axis=1)[:, columns]
            out[row, 1:] = np.cumsum(increments[:-1], axis=0)
        return out

    paths = _concat(map_chunks(draw, n, threads), n_points, d)
    logger.info(
        "ensemble_sampled", method="circulant", n_samples=n, n_points=n_points, dim=d
    )
    return PathEnsemble(
        spec=spec, grid=grid, paths=paths, seed=seed, method="circulant"
    )


def _coordinate_order(d: int) -> np.ndarray:
    """Interleave real/imaginary columns so coordinates 2j, 2j+1 share a transform."""
    n_complex = (d + 1) // 2
    order = np.empty(2 * n_complex, dtype=int)
    order[0::2] = np.arange(n_complex)
    order[1::2] = n_complex + np.arange(n_complex)
    return order[:d]


def sample_star(
    spec: KernelSpec,
    grid: Grid,
    n: int,
    seed: SeedSpec,
    threads: Optional[int] = None,
) -> PathEnsemble:
    """Joint draw across all branches of a starburst; every branch starts at 0."""
    if spec.is_circle:
        raise DomainError("sample_star needs a star geometry")
    return sample_dense(spec, grid, n, seed, threads)


def sample_paths(
    spec: KernelSpec,
    grid: Grid,
    n: int,
    seed: SeedSpec,
    method: str = "auto",
    threads: Optional[int] = None,
) -> PathEnsemble:
    """Dispatch to a sampler; ``auto`` picks circulant for uniform loop grids."""
    if method == "auto":
        method = "circulant" if grid.is_circle and grid.is_uniform() else "dense"
    if method == "circulant":
        return sample_loop_circulant(spec, grid, n, seed, threads)
    if method == "dense":
        sampler = sample_dense if spec.is_circle else sample_star
        return sampler(spec, grid, n, seed, threads)
    raise DomainError(f"unknown sampling method {method!r}")


def loop_increments(ensemble: PathEnsemble) -> np.ndarray:
    """Cyclic increments of loop paths; the last one closes the loop back to b(0)."""
    if not ensemble.grid.is_circle:
        raise DomainError("loop increments need a circle ensemble")
    paths = ensemble.paths
    return np.diff(paths, axis=1, append=paths[:, :1, :])


def closure_residual(ensemble: PathEnsemble) -> float:
    """max |b(T) - b(0)| with b(T) reached through the last cyclic increment."""
    if ensemble.n_samples == 0:
        return 0.0
    last = loop_increments(ensemble)[:, -1, :]
    reached = ensemble.paths[:, -1, :] + last
    return float(np.max(np.abs(reached - ensemble.paths[:, 0, :])))


def _concat(chunks: list[np.ndarray], n_points: int, d: int) -> np.ndarray:
    if not chunks:
        return np.zeros((0, n_points, d))
    return np.concatenate(chunks, axis=0)


def restrict_to_subgrid(ensemble: PathEnsemble, step: int) -> PathEnsemble:
    """The same paths observed on every ``step``-th point of a loop grid."""
    grid, index = ensemble.grid.subgrid(step)
    return PathEnsemble(
        spec=ensemble.spec,
        grid=grid,
        paths=ensemble.paths[:, index, :],
        seed=ensemble.seed,
        method=ensemble.method,
    )
