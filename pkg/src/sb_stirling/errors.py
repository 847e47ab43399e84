"""Exception hierarchy for sb-stirling."""

from typing import Optional


class StirlingError(Exception):
    """Base class for every error raised by sb-stirling."""


class ZeroValuationError(StirlingError, ValueError):
    """Raised when the 2-adic valuation or odd part of zero is requested."""


class DomainError(StirlingError, ValueError):
    """Raised when an argument lies outside an operation's domain."""


class PrecisionUnderflowError(StirlingError, ValueError):
    """Raised when a truncated argument cannot support the requested precision."""


class ArithmeticInvariantError(StirlingError, AssertionError):
    """Raised when an arithmetic guarantee fails. Always an implementation bug."""


class ConfigError(StirlingError, ValueError):
    """Raised when a RunConfig violates its invariants."""


class GoldenDataError(StirlingError):
    """Raised when a golden data file is missing or cannot be decoded."""


class PatternMismatchError(StirlingError):
    """Raised when probed valuations stop following nu(x - x0) + c."""


class UnresolvedError(StirlingError):
    """Raised when a probe reaches the escalation cap during zero extraction.

    Args:
        reason: Human readable description
        point: Integer argument at which the cap was reached, if any
    """

    def __init__(self, reason: str, point: Optional[int] = None):
        super().__init__(reason)
        self.reason = reason
        self.point = point
