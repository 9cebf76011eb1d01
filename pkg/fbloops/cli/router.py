"""Subcommand registry for the ``fbloops`` command line."""

import argparse
import sys
from typing import Optional

from fbloops.cli.commands import (
    Command,
    edwards,
    loctime,
    moments,
    sample,
    star,
    verify,
)
from fbloops.core.exceptions import ConfigError


class UsageError(ConfigError):
    """Unknown flag or malformed command line."""


class ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting; bad flags map to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Options shared by every subcommand. All default to None."""
    parser.add_argument("--config", dest="config_file", help="JSON run configuration")
    parser.add_argument("--threads", type=int, help="Worker threads (FBLOOPS_THREADS)")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--out", help="Output file or directory")
    parser.add_argument(
        "--format", choices=["json", "csv", "binary"], help="Output format"
    )
    parser.add_argument("--log-level", dest="log_level", help="Logging level")


class CommandRouter:
    """Collects commands and builds the argparse tree."""

    def __init__(self) -> None:
        self.commands: dict[str, Command] = {}

    def include(self, command: Command) -> None:
        self.commands[command.name] = command

    def build_parser(
        self, prog: Optional[str] = None, description: str = ""
    ) -> ArgumentParser:
        parser = ArgumentParser(prog=prog, description=description)
        subparsers = parser.add_subparsers(
            dest="subcommand", metavar="COMMAND", required=True
        )
        for command in self.commands.values():
            sub = subparsers.add_parser(
                command.name, help=command.help, description=command.help
            )
            add_common_arguments(sub)
            command.add_arguments(sub)
            sub.set_defaults(handler=command.handler)
        return parser


cli_router = CommandRouter()

# Register subcommands
for _module in (sample, loctime, moments, star, edwards, verify):
    cli_router.include(_module.command)
