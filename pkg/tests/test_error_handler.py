"""Tests for exception to exit-code translation and run correlation."""

import json

import pytest
import structlog
from pydantic import BaseModel

from fbloops.core.exceptions import (
    DivergenceError,
    DomainError,
    QuadratureError,
    VerificationFailedError,
)
from fbloops.middleware.correlation import run_context
from fbloops.middleware.error_handler import handle_errors


class _Positive(BaseModel):
    value: int


def _raise(exc: Exception):
    def command() -> int:
        raise exc

    return command


@pytest.mark.parametrize(
    ("exc", "code"),
    [
        (DomainError("bad branch"), 1),
        (DivergenceError("infinite mean"), 2),
        (QuadratureError("no convergence", achieved_error=1e-2), 2),
        (VerificationFailedError(["pd_boundary"]), 3),
        (RuntimeError("unexpected"), 2),
    ],
)
def test_exit_codes(exc: Exception, code: int, capsys: pytest.CaptureFixture) -> None:
    """Each exception family maps to its exit code and an error record on stderr."""
    assert handle_errors(_raise(exc)) == code
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["exit_code"] == code


def test_validation_error_exit_code() -> None:
    """pydantic validation errors are validation failures."""

    def command() -> int:
        _Positive(value="not a number")
        return 0

    assert handle_errors(command) == 1


def test_success_passes_through() -> None:
    """A successful command keeps its own return value."""
    assert handle_errors(lambda: 0) == 0


def test_verification_error_lists_failures() -> None:
    """Failed report names are carried in the details."""
    exc = VerificationFailedError(["mean_local_time", "edwards"])
    assert exc.details == {"failed": ["mean_local_time", "edwards"]}


def test_run_context_binds_and_clears() -> None:
    """The run id and subcommand are bound only inside the block."""
    with run_context("loctime", run_id="abc") as run_id:
        bound = structlog.contextvars.get_contextvars()
        assert run_id == "abc"
        assert bound == {"run_id": "abc", "subcommand": "loctime"}
    assert structlog.contextvars.get_contextvars() == {}