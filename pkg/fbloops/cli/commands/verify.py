"""``fbloops verify``: run verification experiments and report their verdicts."""

import argparse
from typing import Any

from fbloops.cli.commands import Command, echo, emit, float_list
from fbloops.core.exceptions import EXIT_OK, VerificationFailedError
from fbloops.schemas.run_config import RunConfig
from fbloops.verification.experiments import EXPERIMENTS, run_all


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "experiment",
        nargs="?",
        choices=[*EXPERIMENTS, "all"],
        help="Experiment key or 'all'",
    )
    parser.add_argument(
        "--H", dest="H_list", type=float_list, help="Hurst index or list"
    )
    parser.add_argument("--T", type=float)
    parser.add_argument("--lengths", type=float_list)
    parser.add_argument("--d", type=int)
    parser.add_argument("--N", type=int, help="Grid points (per branch for starbursts)")
    parser.add_argument("--n", type=int, help="Monte Carlo paths")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--ladder", dest="eps_ladder", type=float_list)
    parser.add_argument("--delta", type=float)


def overrides(config: RunConfig) -> dict[str, Any]:
    """Experiment keyword arguments set by the run configuration."""
    values: dict[str, Any] = {
        "T": config.T,
        "lengths": config.lengths,
        "dim": config.d,
        "N": config.N,
        "n_per_branch": config.N,
        "n": config.n,
        "eps": config.eps,
        "eps_ladder": config.eps_ladder,
        "eps_values": config.eps_ladder,
        "delta": config.delta,
        "seed": config.seed,
        "threads": config.threads,
        "H_list": config.H_list,
    }
    if config.H_list and len(config.H_list) == 1:
        values["hurst"] = config.H_list[0]
    elif config.H is not None:
        values["hurst"] = config.H
    return values


def handle(config: RunConfig) -> int:
    names = None if config.experiment == "all" else [config.experiment]
    reports = run_all(
        output_dir=config.out,
        overrides=overrides(config),
        names=names,
        config=echo(config),
    )
    emit(
        {
            "reports": [report.model_dump(mode="json") for report in reports],
            "summary": [report.summary_row() for report in reports],
        },
        config,
        write=False,
    )
    failed = [report.name for report in reports if not report.passed]
    if failed:
        raise VerificationFailedError(failed)
    return EXIT_OK


command = Command("verify", "Run verification experiments", add_arguments, handle)
