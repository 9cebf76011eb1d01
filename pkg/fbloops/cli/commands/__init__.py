"""CLI subcommands; each module exposes a ``command`` for the router."""

import argparse
from typing import Any, Callable, Mapping, NamedTuple

import structlog

from fbloops.repositories.artifacts import dumps, write_json
from fbloops.schemas.run_config import RunConfig

logger = structlog.get_logger(__name__)


class Command(NamedTuple):
    name: str
    help: str
    add_arguments: Callable[[argparse.ArgumentParser], None]
    handler: Callable[[RunConfig], int]


def float_list(text: str) -> list[float]:
    """Parse ``"0.1,0.2,0.3"``."""
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r}"
        ) from exc


def echo(config: RunConfig) -> dict[str, Any]:
    """The resolved config as embedded in every artifact."""
    return config.model_dump(mode="json", exclude_none=True)


def emit(record: Mapping[str, Any], config: RunConfig, write: bool = True) -> None:
    """
    Write ``record`` with the config echoed to ``--out``, or print it on stdout.

    Commands whose ``--out`` names another artifact pass ``write=False``.
    """
    if write and config.out:
        write_json(config.out, record, echo(config))
        logger.info("record_written", path=config.out)
    else:
        print(dumps({**record, "config": echo(config)}))
