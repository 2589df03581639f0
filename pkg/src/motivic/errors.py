"""Exception hierarchy shared by every module."""

from __future__ import annotations


class MotivicError(Exception):
    """Base class for engine errors."""


class QOutOfRange(MotivicError):
    pass


class NotInvertible(MotivicError):
    pass


class ArityMismatch(MotivicError):
    pass


class AmbientMismatch(MotivicError):
    pass


class BaseMismatch(MotivicError):
    pass


class PointOutsideDomain(MotivicError):
    pass


class DegreeCapExceeded(MotivicError):
    pass


class NotIntegrable(MotivicError):
    """Raised by summation; ``witness`` names the offending progression or stage."""

    def __init__(self, message: str, witness=None, stage: str | None = None):
        super().__init__(message)
        self.witness = witness
        self.stage = stage


class UninstantiatedParameters(MotivicError):
    pass


class CountTooLarge(MotivicError):
    pass


class PresentationMismatch(MotivicError):
    pass


class ZeroAngularComponent(MotivicError):
    pass


class MissingJacobianData(MotivicError):
    pass


class DimensionMismatch(MotivicError):
    pass


class OrderNotNegative(MotivicError):
    pass


class DecompositionNotAdapted(MotivicError):
    pass


class PartitionInvalid(MotivicError):
    pass


class NotASubset(MotivicError):
    pass


class IntegrabilityViolation(MotivicError):
    pass


class ParseError(MotivicError):
    def __init__(self, message: str, line: int = 0, column: int = 0, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        loc = f"{line}:{column}: " if line else ""
        tail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{loc}{message}{tail}")


class ValidationError(MotivicError):
    def __init__(self, message: str, clause: str = ""):
        self.clause = clause
        super().__init__(f"{clause}: {message}" if clause else message)
