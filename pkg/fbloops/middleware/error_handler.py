"""Translation of exceptions into exit codes."""

import json
import sys
from typing import Callable

import structlog
from pydantic import ValidationError

from fbloops.core.exceptions import EXIT_NUMERIC, EXIT_VALIDATION, FbLoopsError
from fbloops.schemas.records import ErrorRecord

logger = structlog.get_logger(__name__)


def _emit(record: ErrorRecord) -> None:
    print(json.dumps(record.model_dump(), default=str), file=sys.stderr)


def handle_errors(command: Callable[[], int]) -> int:
    """
    Run ``command`` and map failures to exit codes.

    Library errors carry their own exit code; pydantic validation errors are
    validation failures (1); anything else is reported as a numeric failure (2).

    Args:
        command: Zero-argument callable returning an exit code

    Returns:
        int: Process exit code
    """
    try:
        return command()
    except FbLoopsError as exc:
        logger.warning(
            "command_failed",
            error=type(exc).__name__,
            message=exc.message,
            exit_code=exc.exit_code,
            details=exc.details,
        )
        _emit(
            ErrorRecord(
                message=exc.message, exit_code=exc.exit_code, details=exc.details
            )
        )
        return exc.exit_code
    except ValidationError as exc:
        logger.warning("validation_failed", errors=exc.error_count())
        _emit(
            ErrorRecord(
                message=str(exc),
                exit_code=EXIT_VALIDATION,
                details={
                    "errors": exc.errors(include_url=False, include_context=False)
                },
            )
        )
        return EXIT_VALIDATION
    except Exception as exc:  # pylint: disable=broad-except
        logger.exception(
            "unhandled_exception",
            exception_type=type(exc).__name__,
            exception_message=str(exc),
        )
        _emit(ErrorRecord(message="Internal error", exit_code=EXIT_NUMERIC))
        return EXIT_NUMERIC
