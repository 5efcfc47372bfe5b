"""
Custom exception classes for the application.

This module defines the error hierarchy shared by the solvers, the
rearrangement environment and the experiment harness:
- ValidationError: scenario/config invariants (exit code 1)
- ContractViolationError: caller broke an operation's preconditions (exit code 2)
- SolverError: LP/MILP failures and missing continuation values (exit code 2)
- ResourceLimitError: reachable-set growth beyond the configured cap (exit code 3)
"""

from typing import Optional

from constants import EXIT_CODES


class StackelguideError(Exception):
    """
    Base class for all errors raised by this package.

    Every subclass carries an error code for categorization and the process
    exit code the CLI should return when the error escapes a command.
    """
    exit_code = EXIT_CODES["RUNTIME_ERROR"]

    def __init__(self, message: str, error_code: str = "STACKELGUIDE_ERROR"):
        """
        Initialize StackelguideError.

        Args:
            message: Description of the error
            error_code: Optional error code for categorization
        """
        self.message = message
        self.error_code = error_code
        super().__init__(self.message)


class ValidationError(StackelguideError):
    """
    Raised when a scenario or configuration value violates an invariant.

    The message names the offending field or cell.
    """
    exit_code = EXIT_CODES["VALIDATION_ERROR"]

    def __init__(self, message: str, error_code: str = "VALIDATION_ERROR"):
        super().__init__(message, error_code)


class ScenarioParseError(ValidationError):
    """Raised when a scenario or stage-game file cannot be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        """
        Initialize ScenarioParseError.

        Args:
            message: Description of the parse failure
            line: 1-based line of the failure, when known
            column: 1-based column of the failure, when known
        """
        self.line = line
        self.column = column
        if line is not None:
            location = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{message} ({location})"
        super().__init__(message, "PARSE_ERROR")


class ContractViolationError(StackelguideError):
    """Raised when an operation is called with arguments outside its contract."""

    def __init__(self, message: str, error_code: str = "CONTRACT_VIOLATION"):
        super().__init__(message, error_code)


class SolverError(StackelguideError):
    """Raised when an LP or MILP solve fails for numerical or structural reasons."""

    def __init__(self, message: str, error_code: str = "SOLVER_ERROR"):
        super().__init__(message, error_code)


class MissingValueError(SolverError):
    """Raised when a successor state has no entry in the next-stage value table."""

    def __init__(self, state, stage: Optional[int] = None):
        """
        Initialize MissingValueError.

        Args:
            state: The successor state that has no value
            stage: Stage index of the value table that was consulted
        """
        self.state = state
        self.stage = stage
        where = "" if stage is None else f" at stage {stage}"
        super().__init__(f"No continuation value for state {state!r}{where}", "MISSING_VALUE")


class ResourceLimitError(StackelguideError):
    """Raised when forward reachability exceeds the configured state cap."""
    exit_code = EXIT_CODES["RESOURCE_LIMIT"]

    def __init__(self, message: str, error_code: str = "RESOURCE_LIMIT"):
        super().__init__(message, error_code)


def handle_exception(exception: Exception, log_func=None) -> dict:
    """
    Handle exceptions uniformly across the application.

    Args:
        exception: The exception to handle
        log_func: Optional logging function (e.g., logger.error)

    Returns:
        A dictionary containing error information with keys:
        - success: Boolean indicating operation failure
        - error_code: The error code if available
        - message: The error message
        - exception_type: The type of exception
        - exit_code: The process exit code matching the error

    Example:
        >>> handle_exception(ValidationError("horizon must be >= 1"))["exit_code"]
        1
    """
    error_code = getattr(exception, "error_code", "UNKNOWN_ERROR")
    exit_code = getattr(exception, "exit_code", EXIT_CODES["RUNTIME_ERROR"])

    error_response = {
        "success": False,
        "error_code": error_code,
        "message": str(exception),
        "exception_type": type(exception).__name__,
        "exit_code": exit_code,
    }

    if log_func:
        log_func(f"Exception occurred: {type(exception).__name__} - {exception} (Code: {error_code})")

    return error_response
