"""Quadrature rules for integrands with integrable endpoint singularities."""

import math
from typing import Callable

import numpy as np
import structlog
from scipy import integrate

from fbloops.core.exceptions import QuadratureError

logger = structlog.get_logger(__name__)


def singular_quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    rtol: float = 1e-10,
    levels: int = 40,
    breakpoints: tuple[float, ...] = (),
) -> float:
    """
    Integral of ``func`` over [a, b] with a possible singularity at ``a``.

    The interval is cut geometrically toward ``a`` (pieces [a + L/2^{k+1},
    a + L/2^k]) and each piece is handed to QUADPACK, so a tau^{-p} blow-up
    is resolved without relying on a single global rule.
    """
    if b <= a:
        return 0.0
    length = b - a
    cuts = a + length * np.exp2(-np.arange(levels, -1, -1.0))
    inner = [p for p in breakpoints if a < p < b]
    edges = np.unique(np.concatenate([[a], cuts, inner]))
    total = 0.0
    abs_error = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        value, error = integrate.quad(func, lo, hi, epsabs=0.0, epsrel=rtol, limit=200)
        total += value
        abs_error += error
    if not math.isfinite(total) or abs_error > max(1e3 * rtol, 1e-8) * abs(total):
        raise QuadratureError(
            f"quadrature on [{a}, {b}] did not converge",
            achieved_error=abs_error / abs(total) if total else math.inf,
        )
    return total


def graded_fractions(levels_low: int, levels_high: int) -> np.ndarray:
    """Panel edges on [0, 1] refined geometrically toward 0 and toward 1."""
    low = np.exp2(-np.arange(levels_low, 0, -1.0))
    high = 1.0 - np.exp2(-np.arange(1, levels_high + 1.0))
    return np.unique(np.concatenate([[0.0], low, [0.5], high, [1.0]]))


def composite_gauss(
    lo: np.ndarray, hi: np.ndarray, order: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights on panels [lo, hi], batched.

    ``lo`` and ``hi`` share a shape (..., P); results have shape (..., P * order).
    Zero-length panels contribute zero weight.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (np.asarray(hi) - np.asarray(lo))
    mid = 0.5 * (np.asarray(hi) + np.asarray(lo))
    nodes = mid[..., None] + half[..., None] * x
    weights = half[..., None] * w
    shape = nodes.shape[:-2] + (nodes.shape[-2] * order,)
    return nodes.reshape(shape), weights.reshape(shape)
