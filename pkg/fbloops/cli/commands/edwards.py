"""``fbloops edwards``: Edwards reweighting of a loop or starburst ensemble."""

import argparse

import numpy as np

from fbloops.cli.commands import Command, emit, float_list
from fbloops.core.exceptions import EXIT_OK
from fbloops.models.estimates import EdwardsEstimate, LocalTimeEstimate
from fbloops.models.ensemble import PathEnsemble
from fbloops.repositories.ensemble_repository import load_ensemble
from fbloops.schemas.run_config import RunConfig
from fbloops.simulation.edwards import (
    edwards_weights,
    reweighted_observable,
    stability_scan,
)
from fbloops.simulation.local_time import center, local_time
from fbloops.simulation.starburst import combined_local_time

# Couplings scanned when --scan is given without --g-values.
DEFAULT_SCAN = tuple(float(g) for g in np.geomspace(0.01, 10.0, 13))


def add_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--in", dest="input", help="Ensemble file")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--g", type=float, help="Coupling")
    parser.add_argument(
        "--g-values", dest="g_values", type=float_list, help="Couplings"
    )
    parser.add_argument(
        "--g-self", dest="g_self", type=float_list, help="Starburst self couplings"
    )
    parser.add_argument(
        "--g-cross", dest="g_cross", type=float, help="Starburst cross coupling"
    )
    parser.add_argument("--delta", type=float)
    parser.add_argument("--region", choices=["full", "lambda", "gamma"])
    parser.add_argument("--center", action="store_true", default=None)
    parser.add_argument("--centering", choices=["grid", "quadrature"])
    parser.add_argument(
        "--observables",
        type=lambda text: [name for name in text.split(",") if name],
        help="Comma-separated observables, e.g. radius_of_gyration_sq,end_to_end_sq:0",
    )
    parser.add_argument("--scan", action="store_true", default=None)


def _with_observables(
    ensemble: PathEnsemble, ew: EdwardsEstimate, names: list[str]
) -> EdwardsEstimate:
    for name in names:
        ew = ew.with_observable(reweighted_observable(ensemble, ew, name))
    return ew


def _loop_estimate(ensemble: PathEnsemble, config: RunConfig) -> LocalTimeEstimate:
    est = local_time(ensemble, config.eps, config.region, config.delta, config.threads)
    return center(est, ensemble.spec, config.centering) if config.center else est


def handle(config: RunConfig) -> int:
    ensemble = load_ensemble(config.input)
    record: dict = {"eps": config.eps, "n_samples": ensemble.n_samples}

    if ensemble.grid.is_circle:
        est = _loop_estimate(ensemble, config)
        single = [config.g] if config.g is not None else config.g_self
        g_values = config.g_values or single
        record["quantity"] = est.quantity
        record["centered"] = est.centered
        record["results"] = [
            _with_observables(
                ensemble, edwards_weights(est, g), config.observables
            ).record()
            for g in g_values
        ]
    else:
        # L(g) is linear in the couplings, so a scan multiplies the combined local time.
        weights = config.coupling_weights(ensemble.spec.geometry.n_branches)
        est = combined_local_time(
            ensemble, weights, config.eps, config.centering, config.threads
        )
        g_values = config.g_values or []
        ew = _with_observables(
            ensemble, edwards_weights(est, weights), config.observables
        )
        record["quantity"] = est.quantity
        record["results"] = [ew.record()]

    if config.scan:
        record["stability"] = stability_scan(est, g_values or DEFAULT_SCAN).record()
    emit(record, config)
    return EXIT_OK


command = Command(
    "edwards", "Edwards reweighting and observables", add_arguments, handle
)
