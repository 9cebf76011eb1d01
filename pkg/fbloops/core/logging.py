"""Structured logging configuration."""

import logging
import sys
from typing import Any, Optional

import numpy as np
import structlog
from structlog.types import EventDict, Processor, WrappedLogger

from fbloops.core.config import settings


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist() if value.size <= 16 else f"<array shape={value.shape}>"
    return value


def coerce_numpy(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    """Turn numpy scalars and small arrays into plain values for the renderers."""
    return {key: _plain(value) for key, value in event_dict.items()}


def configure_logging(level: Optional[str] = None) -> None:
    """
    Configure structured logging for the library and CLI.

    Records go to stderr; stdout carries command output only.

    Args:
        level: Optional level overriding ``settings.LOG_LEVEL``
    """
    log_level_str = str(level or settings.LOG_LEVEL).upper()
    log_level = getattr(logging, log_level_str, logging.INFO)
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=log_level,
        force=True,
    )

    processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso"),
        coerce_numpy,
        structlog.processors.format_exc_info,
    ]

    if settings.LOG_FORMAT == "json":
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()))

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
