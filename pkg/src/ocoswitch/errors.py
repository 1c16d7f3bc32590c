"""Exception hierarchy shared by every module."""

from __future__ import annotations


class OcoSwitchError(Exception):
    """Base class for library errors."""


class InvalidArgument(OcoSwitchError, ValueError):
    """An argument violates a documented precondition."""


class InformationViolation(OcoSwitchError):
    """A solver asked for gradient information it is not entitled to."""


class Unsupported(OcoSwitchError):
    """The requested combination of inputs is not implemented."""


class ConstrainedCaseUnsupported(Unsupported):
    """The unconstrained optimum left the feasible set."""


class NumericRangeError(OcoSwitchError, ArithmeticError):
    """A closed-form quantity would overflow 64-bit floats."""
