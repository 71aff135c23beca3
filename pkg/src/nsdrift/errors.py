"""Exception types raised across the package."""
from __future__ import annotations


class NSDError(ValueError):
    """Base class for all nsdrift errors."""


class DimensionMismatch(NSDError):
    pass


class KTooLarge(NSDError):
    pass


class EmptySet(NSDError):
    pass


class DomainError(NSDError):
    """Argument outside the support of a distribution or generator."""


class NsdParamNonPositive(NSDError):
    pass


class OverflowGuard(NSDError):
    pass


class ClassMissing(NSDError):
    """A window lacks one class, or the minority class is too small for k."""


class DataFormatError(NSDError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
