"""Exception types shared by the engines and front ends."""
from typing import List, Optional


class RelicError(Exception):
    """Base class for every error raised by the toolkit."""


class SortError(RelicError, ValueError):
    """A variable is used with inconsistent or unsuitable sorts."""

    def __init__(self, message: str, variable: Optional[str] = None):
        super().__init__(message)
        self.variable = variable


class CaptureError(RelicError, ValueError):
    """Substitution would capture or replace a bound variable."""


class ShiftDomainError(RelicError, ValueError):
    """A relative-only operation met an absolute time index (or a negative step)."""


class UnboundVariableError(RelicError, ValueError):
    """Evaluation met a variable missing from the assignment."""


class ContractViolation(RelicError, ValueError):
    """An operation was called outside its precondition."""


class UnsupportedTheoryError(RelicError, RuntimeError):
    """Input leaves linear arithmetic (products of variables, mixed sorts)."""


class ResourceLimitError(RelicError, RuntimeError):
    """A configured cap (Cooper candidates, refinement rounds) was exceeded."""


class SpecError(RelicError, ValueError):
    """Specification text failed to parse or validate."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None,
                 diagnostics: Optional[List] = None):
        self.line = line
        self.column = column
        self.diagnostics = list(diagnostics or [])
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
