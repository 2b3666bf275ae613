"""Exception hierarchy for censcov-surv.

Numerical trouble (non-convergence, singular information) is flagged on result
objects instead of raised; the exceptions here are for inputs that cannot be
fitted at all.
"""

from typing import Optional, Sequence


class CensCovError(Exception):
    """Base class for all censcov-surv errors."""


class DomainError(CensCovError, ValueError):
    """Argument outside the support of a distribution."""


class CensoringParseError(CensCovError, ValueError):
    """Invalid pair of interval2 tokens."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NonIdentifiableError(CensCovError):
    """Sample carries no information about one of the parameters."""


class OptimizationError(CensCovError):
    """Fit cannot start or cannot produce an estimate."""


class IngestError(CensCovError):
    """One or more problems while reading a CSV file."""

    def __init__(self, messages: Sequence[str]):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class UsageError(CensCovError):
    """Bad command line."""
