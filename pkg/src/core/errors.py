"""
Module: errors

Exception hierarchy shared by every package in the project. The CLI maps any
`ReluSpanError` to exit code 1 with a one-line diagnostic.
"""

from typing import Optional


class ReluSpanError(Exception):
    """Base class for all errors raised by this project."""


class NotInYError(ReluSpanError):
    """The weighted limit f(x)/(1+|x|) could not be established at an infinity."""

    def __init__(self, side: str, message: str):
        self.side = side
        super().__init__(f"target may not lie in Y (not in Y at {side}inf): {message}")


class MissingAsymptoticsError(ReluSpanError):
    """An opaque target was evaluated at ±inf without any asymptotic data."""


class TargetProbeError(ReluSpanError):
    """The target evaluator failed the large-|x| sanity probe."""


class InputFileError(ReluSpanError):
    """
    Malformed network, PL or measure file.

    Args:
        path (str): File that failed to load.
        detail (str): Positioned diagnostic (line/column or field path).
    """

    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


class CoverageError(ReluSpanError):
    """A finite atom lies farther than halfwidth/2 from every hat center."""


class UnboundedExtensionError(ReluSpanError):
    """Bounded-extension pairing requested for a function with a nonzero tail slope."""


class ExprError(ReluSpanError):
    """
    Base class for expression errors that carry a 0-based source position.

    Args:
        message (str): Human readable description.
        position (int): Offset in the source text where the problem was detected.
    """

    def __init__(self, message: str, position: int):
        self.message = message
        self.position = position
        super().__init__(f"{message} at position {position}")


class ExprLexError(ExprError):
    pass


class ExprSyntaxError(ExprError):
    pass


class UnknownFunctionError(ExprError):
    pass


class EvaluationDomainError(ReluSpanError):
    """
    An expression operation was applied outside its domain.

    Args:
        op (str): Operation name ("sqrt", "/", "^").
        value (float): Offending operand value.
        x (Optional[float]): Input coordinate at which evaluation failed.
    """

    def __init__(self, op: str, value: float, x: Optional[float]):
        self.op = op
        self.value = value
        self.x = x
        super().__init__(f"domain error in {op}: operand {value!r} at x={x!r}")
