"""Exception hierarchy; each family maps to a CLI exit code."""

from typing import Any, Optional

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_VERIFICATION = 3


class FbLoopsError(Exception):
    """Base exception class for library errors."""

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_NUMERIC,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        """
        Initialize the exception.

        Args:
            message: Error message
            exit_code: Process exit code used by the CLI
            details: Additional error details
        """
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class DomainError(FbLoopsError):
    """Arguments outside an operation's domain."""

    def __init__(
        self,
        message: str = "Argument out of domain",
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        super().__init__(message=message, exit_code=EXIT_VALIDATION, details=details)


class ConfigError(FbLoopsError):
    """Invalid or incomplete run configuration."""

    def __init__(
        self,
        message: str = "Invalid configuration",
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        super().__init__(message=message, exit_code=EXIT_VALIDATION, details=details)


class FormatError(FbLoopsError):
    """Unreadable or inconsistent ensemble file."""

    def __init__(
        self, message: str = "Bad file format", details: Optional[dict[str, Any]] = None
    ) -> None:
        super().__init__(message=message, exit_code=EXIT_VALIDATION, details=details)


class NumericError(FbLoopsError):
    """Numerical failure (factorization, eigensolve, quadrature, overflow)."""

    def __init__(
        self,
        message: str = "Numerical failure",
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        super().__init__(message=message, exit_code=EXIT_NUMERIC, details=details)


class KernelNotPositiveDefiniteError(NumericError):
    """Covariance kernel could not be factorized even with jitter."""

    def __init__(self, min_eigenvalue: float, details: Optional[dict] = None) -> None:
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            message=f"Covariance kernel is not positive definite "
            f"(min eigenvalue {min_eigenvalue:.3e})",
            details={"min_eigenvalue": min_eigenvalue, **(details or {})},
        )


class EmbeddingError(NumericError):
    """Circulant increment covariance has a negative eigenvalue."""


class DivergenceError(NumericError):
    """Requested quantity is infinite (e.g. the eps=0 mean at Hd >= 1)."""


class QuadratureError(NumericError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, achieved_error: float) -> None:
        self.achieved_error = achieved_error
        super().__init__(message=message, details={"achieved_error": achieved_error})


class WeightOverflowError(NumericError):
    """exp(-g L) overflows; g lies beyond the stable range."""

    def __init__(self, magnitude: float, g: float) -> None:
        self.magnitude = magnitude
        super().__init__(
            message=f"Edwards weight exponent {magnitude:.3e} overflows at g={g}",
            details={"magnitude": magnitude, "g": g},
        )


class ResourceError(NumericError):
    """Allocation would exceed the configured memory bound."""


class VerificationFailedError(FbLoopsError):
    """One or more verification reports returned a failing verdict."""

    def __init__(self, failed: list[str]) -> None:
        super().__init__(
            message=f"Verification failed: {', '.join(failed)}",
            exit_code=EXIT_VERIFICATION,
            details={"failed": failed},
        )
