"""Exception hierarchy shared by all modules.

Exit-code mapping used by the CLI: PreconditionError -> 2,
ObligationFailedError -> 3, BudgetExceededError -> 4.
"""

from __future__ import annotations


class MeanDimError(Exception):
    """Base class for all library errors."""


class PreconditionError(MeanDimError):
    """An operation was called outside its contract (bad input, unknown vertex, ...)."""


class InsufficientWindowError(PreconditionError):
    """Window data does not cover the range required by a metric computation."""

    def __init__(self, message: str, required: tuple[int, int]):
        super().__init__(f"{message}; required window [{required[0]}, {required[1]})")
        self.required = required


class ObligationFailedError(MeanDimError):
    """A certificate obligation failed; carries the failing record."""

    def __init__(self, record):
        super().__init__(f"obligation failed: {record.name}")
        self.record = record


class BudgetExceededError(MeanDimError):
    """An iteration cap or size budget was exceeded."""
