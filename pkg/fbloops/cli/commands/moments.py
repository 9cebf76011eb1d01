"""``fbloops moments``: analytic and grid-rule moments of the local time."""

import argparse
from typing import Any

from fbloops.cli.commands import Command, emit, float_list
from fbloops.core.exceptions import EXIT_OK
from fbloops.models.kernel import Grid, KernelSpec
from fbloops.schemas.run_config import RunConfig
from fbloops.simulation.local_time import (
    expected_L_eps_analytic,
    expected_L_eps_grid,
    second_moment_analytic,
    second_moment_grid,
)
from fbloops.simulation.starburst import (
    expected_branch_local_time_grid,
    expected_cross_local_time,
    expected_cross_local_time_grid,
    expected_line_local_time,
)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--geometry", choices=["circle", "star"])
    parser.add_argument("--T", type=float)
    parser.add_argument("--lengths", type=float_list)
    parser.add_argument("--H", type=float)
    parser.add_argument("--d", type=int)
    parser.add_argument("--N", type=int, help="Also evaluate the grid rule on N points")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--delta", type=float, help="Gap; adds E(Lambda_eps^2)")
    parser.add_argument("--region", choices=["full", "lambda", "gamma"])


def _loop_moments(spec: KernelSpec, config: RunConfig) -> dict[str, Any]:
    region, delta = config.region, config.delta
    record: dict[str, Any] = {
        "expected": expected_L_eps_analytic(spec, config.eps, region, delta)
    }
    if spec.hd < 1.0:
        record["expected_eps0"] = expected_L_eps_analytic(spec, 0.0, region, delta)
    grid = Grid.circle(spec.geometry.T, config.N) if config.N else None
    if grid is not None:
        record["expected_grid"] = expected_L_eps_grid(
            spec, grid, config.eps, region, delta
        )
    if delta is not None:
        spec.require_constructible()
        record["second_moment_lambda"] = second_moment_analytic(spec, config.eps, delta)
        if grid is not None:
            record["second_moment_lambda_grid"] = second_moment_grid(
                spec, grid, config.eps, delta
            )
    return record


def _star_moments(spec: KernelSpec, config: RunConfig) -> dict[str, Any]:
    lengths = spec.geometry.lengths
    grid = Grid.star(lengths, config.N) if config.N else None
    branches = []
    for k, length in enumerate(lengths):
        entry: dict[str, Any] = {
            "branch": k,
            "expected": expected_line_local_time(
                spec.hurst, spec.dim, length, config.eps
            ),
        }
        if grid is not None:
            entry["expected_grid"] = expected_branch_local_time_grid(
                spec, grid, k, config.eps
            )
        branches.append(entry)
    cross = []
    for k in range(len(lengths)):
        for l in range(k + 1, len(lengths)):
            entry = {
                "branches": [k, l],
                "expected": expected_cross_local_time(
                    spec.hurst, spec.dim, lengths[k], lengths[l], config.eps
                ),
            }
            if grid is not None:
                entry["expected_grid"] = expected_cross_local_time_grid(
                    spec, grid, k, l, config.eps
                )
            cross.append(entry)
    return {"branches": branches, "cross": cross}


def handle(config: RunConfig) -> int:
    spec = config.kernel_spec()
    moments = _loop_moments if spec.is_circle else _star_moments
    body = moments(spec, config)
    emit({"H": spec.hurst, "d": spec.dim, "eps": config.eps, **body}, config)
    return EXIT_OK


command = Command(
    "moments", "Expected local times and second moments", add_arguments, handle
)
