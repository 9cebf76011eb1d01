"""Run identifiers for log correlation."""

import uuid
from contextlib import contextmanager
from typing import Iterator, Optional

import structlog

logger = structlog.get_logger(__name__)


@contextmanager
def run_context(subcommand: str, run_id: Optional[str] = None) -> Iterator[str]:
    """
    Bind a run id and the subcommand into the logging context.

    Args:
        subcommand: Name of the command being executed
        run_id: Existing id to reuse (a new uuid4 otherwise)

    Yields:
        str: The run id
    """
    run_id = run_id or str(uuid.uuid4())
    structlog.contextvars.clear_contextvars()
    structlog.contextvars.bind_contextvars(run_id=run_id, subcommand=subcommand)
    logger.debug("run_started")
    try:
        yield run_id
    finally:
        logger.debug("run_finished")
        structlog.contextvars.clear_contextvars()
