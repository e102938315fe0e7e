"""
Centralized Error Handling
Custom exception classes + CLI exception handlers mapping them to exit codes.
"""
from typing import Any, Optional

import pydantic

from app.utils.console import log

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


# ─── Custom Exception Classes ──────────────────────────────

class AppError(Exception):
    """Base application error."""
    def __init__(self, message: str, exit_code: int = EXIT_FAILURE, details: Optional[Any] = None):
        super().__init__(message)
        self.message = message
        self.exit_code = exit_code
        self.details = details


class ValidationError(AppError):
    """Flag or configuration value failed validation."""
    def __init__(self, message: str, details=None):
        super().__init__(message, EXIT_INVALID, details)


class DegenerateParametersError(AppError):
    """p_i + p_d = 0 where the state chain needs a stationary law."""
    def __init__(self, p_i: float, p_d: float):
        super().__init__(
            f"degenerate channel parameters p_i={p_i}, p_d={p_d}: p_i + p_d must be positive",
            EXIT_INVALID,
            {"p_i": p_i, "p_d": p_d},
        )


class DomainError(AppError):
    """Argument outside the domain of the operation."""
    def __init__(self, message: str, details=None):
        super().__init__(message, EXIT_INVALID, details)


class EnumerationGuardError(AppError):
    """Block length too large for exact enumeration."""
    def __init__(self, what: str, value: int, limit: int):
        super().__init__(f"{what}={value} exceeds the enumeration guard ({limit})", EXIT_INVALID,
                         {"value": value, "limit": limit})


class ConvergenceError(AppError):
    """Iterative solver stopped without a certified result."""
    def __init__(self, solver: str, message: str, details=None):
        super().__init__(f"{solver} did not converge: {message}", EXIT_FAILURE, details)


# ─── CLI Exception Handlers ────────────────────────────────

def handle_app_error(exc: AppError) -> int:
    """Handle all custom AppError subclasses."""
    log("Error", exc.message, force=True)
    if exc.details:
        log("Error", f"details: {exc.details}", force=True)
    return exc.exit_code


def handle_model_error(exc: pydantic.ValidationError) -> int:
    """Pydantic model validation failures are invalid arguments."""
    for err in exc.errors():
        loc = ".".join(str(part) for part in err.get("loc", ()))
        log("Error", f"{loc}: {err.get('msg')}", force=True)
    return EXIT_INVALID


def handle_unexpected_error(exc: Exception) -> int:
    """Catch-all for unhandled exceptions."""
    log("Error", f"internal error: {type(exc).__name__}: {exc}", force=True)
    return EXIT_FAILURE
