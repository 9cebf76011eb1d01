"""``fbloops loctime``: regularized self-intersection local time of a loop ensemble."""

import argparse

from fbloops.cli.commands import Command, emit, float_list
from fbloops.core.exceptions import EXIT_OK
from fbloops.repositories.artifacts import write_per_path
from fbloops.repositories.ensemble_repository import load_ensemble
from fbloops.schemas.records import EstimateRecord, ExtrapolationRecord
from fbloops.schemas.run_config import RunConfig
from fbloops.simulation.local_time import (
    QUANTITY_REGION,
    center,
    expected_L_eps_grid,
    extrapolate_to_zero,
    local_time_ladder,
)


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="input", help="Ensemble file (.frlp or .csv)")
    parser.add_argument("--eps", type=float, help="Regularization eps")
    parser.add_argument(
        "--ladder", dest="eps_ladder", type=float_list, help="eps ladder"
    )
    parser.add_argument("--delta", type=float, help="Gap for the Lambda/Gamma split")
    parser.add_argument("--region", choices=["full", "lambda", "gamma"])
    parser.add_argument("--center", action="store_true", default=None)
    parser.add_argument("--centering", choices=["grid", "quadrature"])
    parser.add_argument(
        "--per-path", dest="per_path", help="CSV file for per-path values"
    )


def handle(config: RunConfig) -> int:
    ensemble = load_ensemble(config.input)
    eps_values = config.eps_ladder or [config.eps]
    estimates = local_time_ladder(
        ensemble, eps_values, config.region, config.delta, config.threads
    )
    records = []
    reported = []
    for est in estimates:
        expected = expected_L_eps_grid(
            ensemble.spec,
            ensemble.grid,
            est.epsilon,
            QUANTITY_REGION[est.quantity],
            est.delta,
        )
        if config.center:
            est = center(est, ensemble.spec, config.centering)
        reported.append(est)
        records.append(EstimateRecord(**est.record(), expected=expected))

    if config.per_path:
        # Per-path values at the last eps of the ladder.
        last = reported[-1]
        write_per_path(config.per_path, last.per_path, last.quantity)
        records[-1].per_path_file = config.per_path

    payload: dict = {"estimates": [record.model_dump() for record in records]}
    if config.eps_ladder and len(eps_values) > 1:
        means = [est.mean for est in estimates]
        result = extrapolate_to_zero(eps_values, means)
        payload["extrapolation"] = ExtrapolationRecord(
            eps=list(eps_values),
            means=means,
            value=result.value,
            residual=result.residual,
            order=result.order,
        ).model_dump()
    emit(payload if len(records) > 1 else records[0].model_dump(), config)
    return EXIT_OK


command = Command(
    "loctime", "Self-intersection local time of a loop ensemble", add_arguments, handle
)
