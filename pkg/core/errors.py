"""
Exception hierarchy and command-line exit codes
"""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class FairPostError(Exception):
    """Base error. `exit_code` is what the command line returns for it."""

    exit_code: int = EXIT_USAGE


class UsageError(FairPostError):
    """Bad flags or arguments"""

    exit_code = EXIT_USAGE


class InvalidParameterError(FairPostError, ValueError):
    """A numeric parameter is outside its allowed range (gamma <= 0, T = 0, ...)"""

    exit_code = EXIT_USAGE


class DataError(FairPostError):
    """
    Input data is malformed or inconsistent with a model.

    Args:
        message: Human readable description
        row: 1-based line number in the source file, if known
        column: Column name, if known
    """

    exit_code = EXIT_DATA

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        self.row = row
        self.column = column
        prefix = []
        if row is not None:
            prefix.append(f"row {row}")
        if column is not None:
            prefix.append(f"column '{column}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


class NumericalError(FairPostError):
    """A solver failed to produce a certified result"""

    exit_code = EXIT_NUMERICAL


class InfeasibleError(NumericalError):
    """A fairness constraint cannot be met in some group"""

    def __init__(self, message: str, group: Optional[int] = None):
        self.group = group
        if group is not None:
            message = f"group {group}: {message}"
        super().__init__(message)
