"""Exception hierarchy shared by every tracepi module."""

from __future__ import annotations


class TracepiError(Exception):
    """Base class for all tracepi errors."""


class TheoryError(TracepiError):
    pass


class NotSubterm(TheoryError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"rule {index}: right-hand side is not a proper subterm of the left-hand side")


class UnknownSymbol(TheoryError):
    pass


class ArityMismatch(TheoryError):
    pass


class UnsupportedTheory(TheoryError):
    pass


class ProcessError(TracepiError):
    pass


class DomainClash(ProcessError):
    pass


class Cyclic(ProcessError):
    pass


class RestrictNonDomainVar(ProcessError):
    pass


class NonGroundGuard(ProcessError):
    pass


class UnboundVariable(TracepiError):
    pass


class StaticContextViolation(TracepiError):
    pass


class BoundExceeded(TracepiError):
    pass


class ParseError(TracepiError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{message} at {line}:{column}")
