"""``fbloops sample``: draw an ensemble of loop or starburst paths."""

import argparse
from pathlib import Path

from fbloops.cli.commands import Command, echo, emit, float_list
from fbloops.core.exceptions import EXIT_OK
from fbloops.models.ensemble import SeedSpec
from fbloops.models.kernel import Grid
from fbloops.repositories.ensemble_repository import save_ensemble, save_ensemble_csv
from fbloops.schemas.run_config import RunConfig
from fbloops.simulation.sampler import closure_residual, sample_paths


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--geometry", choices=["circle", "star"])
    parser.add_argument("--T", type=float, help="Loop circumference")
    parser.add_argument(
        "--lengths", type=float_list, help="Branch lengths, comma separated"
    )
    parser.add_argument("--H", type=float, help="Hurst index")
    parser.add_argument("--d", type=int, help="Ambient dimension")
    parser.add_argument("--N", type=int, help="Loop grid points, or points per branch")
    parser.add_argument("--n", type=int, help="Number of paths")
    parser.add_argument("--method", choices=["auto", "circulant", "dense"])


def handle(config: RunConfig) -> int:
    spec = config.kernel_spec()
    spec.require_constructible()
    if spec.is_circle:
        grid = Grid.circle(spec.geometry.T, config.N)
    else:
        grid = Grid.star(spec.geometry.lengths, config.N)
    ensemble = sample_paths(
        spec,
        grid,
        config.n,
        SeedSpec(master_seed=config.seed),
        config.method,
        config.threads,
    )
    out = Path(config.out)
    if config.format == "csv" or out.suffix.lower() == ".csv":
        save_ensemble_csv(ensemble, out, echo(config))
    else:
        save_ensemble(ensemble, out, echo(config))

    record = {
        "path": str(out),
        "n_samples": ensemble.n_samples,
        "n_points": ensemble.n_points,
        "method": ensemble.method,
    }
    if spec.is_circle:
        record["closure_residual"] = closure_residual(ensemble)
    emit(record, config, write=False)
    return EXIT_OK


command = Command("sample", "Draw fBm loop or starburst paths", add_arguments, handle)
