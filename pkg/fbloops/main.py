"""Command-line entry point."""

import argparse
import sys
from typing import Optional, Sequence

import structlog

from fbloops.cli.router import cli_router
from fbloops.core.config import settings
from fbloops.core.exceptions import EXIT_OK
from fbloops.core.logging import configure_logging
from fbloops.middleware.correlation import run_context
from fbloops.middleware.error_handler import handle_errors
from fbloops.schemas.run_config import RunConfig

logger = structlog.get_logger(__name__)

# Parsed attributes that are not RunConfig fields.
_PARSER_ONLY = ("handler", "config_file", "log_level", "subcommand")


def create_parser() -> argparse.ArgumentParser:
    """
    Create the ``fbloops`` argument parser.

    Returns:
        ArgumentParser: Parser with every registered subcommand
    """
    return cli_router.build_parser(
        prog="fbloops", description=settings.PROJECT_DESCRIPTION
    )


def _execute(parsed: argparse.Namespace) -> int:
    values = vars(parsed)
    subcommand = values["subcommand"]
    flags = {key: value for key, value in values.items() if key not in _PARSER_ONLY}
    with run_context(subcommand):
        config = RunConfig.resolve(subcommand, flags, values.get("config_file"))
        logger.info("command_started", version=settings.VERSION)
        code = values["handler"](config)
        logger.info("command_finished", exit_code=code)
        return code


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse ``argv``, resolve the run configuration and execute the subcommand.

    Args:
        argv: Command-line arguments without the program name

    Returns:
        int: 0 on success, 1 validation error, 2 numeric error, 3 failed verification
    """
    configure_logging()
    parser = create_parser()

    def command() -> int:
        try:
            parsed = parser.parse_args(argv)
        except SystemExit as exc:
            # --help
            return int(exc.code or EXIT_OK)
        if parsed.log_level:
            configure_logging(parsed.log_level)
        return _execute(parsed)

    return handle_errors(command)


def main() -> None:
    """Console script ``fbloops``."""
    sys.exit(run())


if __name__ == "__main__":
    main()
