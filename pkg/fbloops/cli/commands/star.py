"""``fbloops star``: branch and cross-branch local times of a starburst ensemble."""

import argparse
from typing import Optional

from fbloops.cli.commands import Command, emit, float_list
from fbloops.core.exceptions import EXIT_OK, DomainError
from fbloops.models.estimates import LocalTimeEstimate
from fbloops.repositories.artifacts import write_per_path
from fbloops.repositories.ensemble_repository import load_ensemble
from fbloops.schemas.records import EstimateRecord
from fbloops.schemas.run_config import RunConfig
from fbloops.simulation.starburst import (
    branch_self_local_time,
    branch_self_local_time_centered,
    combined_local_time,
    cross_local_time,
    expected_branch_local_time_grid,
    expected_cross_local_time_grid,
)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="input", help="Starburst ensemble file")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--branch", type=int, help="Branch k (0-based)")
    parser.add_argument(
        "--other-branch", dest="other_branch", type=int, help="Branch l"
    )
    parser.add_argument("--center", action="store_true", default=None)
    parser.add_argument("--centering", choices=["grid", "quadrature"])
    parser.add_argument("--g", type=float, help="Shared self coupling")
    parser.add_argument(
        "--g-self", dest="g_self", type=float_list, help="Self couplings"
    )
    parser.add_argument("--g-cross", dest="g_cross", type=float, help="Cross coupling")
    parser.add_argument("--per-path", dest="per_path")


def _record(est: LocalTimeEstimate, expected: Optional[float]) -> dict:
    return EstimateRecord(**est.record(), expected=expected).model_dump()


def handle(config: RunConfig) -> int:
    ensemble = load_ensemble(config.input)
    if ensemble.grid.is_circle:
        raise DomainError(
            "star needs a starburst ensemble", details={"input": config.input}
        )
    spec, grid, eps = ensemble.spec, ensemble.grid, config.eps
    n_branches = spec.geometry.n_branches

    if config.g_self is not None or config.g_cross is not None or config.g is not None:
        weights = config.coupling_weights(n_branches)
        est = combined_local_time(
            ensemble, weights, eps, config.centering, config.threads
        )
        record = {**_record(est, None), "couplings": weights.model_dump()}
    elif config.branch is not None and config.other_branch is not None:
        k, l = config.branch, config.other_branch
        est = cross_local_time(ensemble, k, l, eps, config.threads)
        record = _record(est, expected_cross_local_time_grid(spec, grid, k, l, eps))
    elif config.branch is not None:
        k = config.branch
        expected = expected_branch_local_time_grid(spec, grid, k, eps)
        if config.center:
            est = branch_self_local_time_centered(
                ensemble, k, eps, config.centering, config.threads
            )
        else:
            est = branch_self_local_time(ensemble, k, eps, config.threads)
        record = _record(est, expected)
    else:
        estimates = [
            _record(
                branch_self_local_time(ensemble, k, eps, config.threads),
                expected_branch_local_time_grid(spec, grid, k, eps),
            )
            for k in range(n_branches)
        ]
        estimates += [
            _record(
                cross_local_time(ensemble, k, l, eps, config.threads),
                expected_cross_local_time_grid(spec, grid, k, l, eps),
            )
            for k in range(n_branches)
            for l in range(k + 1, n_branches)
        ]
        emit({"estimates": estimates}, config)
        return EXIT_OK

    if config.per_path:
        write_per_path(config.per_path, est.per_path, est.quantity)
        record["per_path_file"] = config.per_path
    emit(record, config)
    return EXIT_OK


command = Command(
    "star", "Starburst branch and cross local times", add_arguments, handle
)
