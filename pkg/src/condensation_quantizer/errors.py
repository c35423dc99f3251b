"""Exception types raised by the analysis modules.

Each exception carries a short machine-readable ``code`` which the command
line tool copies into its error JSON.
"""

from typing import Optional


class QuantizationError(Exception):
    """Base class for all analysis errors"""

    code = "error"


class InvalidSystemError(QuantizationError, ValueError):
    """Malformed system definition or a system that fails the IOSC check"""

    code = "invalid_system"


class DegenerateSystemError(QuantizationError, ValueError):
    """Input whose attractor or Moran equation has no useful solution"""

    code = "degenerate"


class NotMaximalError(QuantizationError, ValueError):
    """A word set that had to be a maximal antichain is not one"""

    code = "not_maximal"


class BudgetExceededError(QuantizationError, RuntimeError):
    """An enumeration ran past its node or depth budget"""

    code = "budget_exceeded"

    def __init__(self, message: str, budget: Optional[int] = None):
        super().__init__(message)
        self.budget = budget
