"""Exception taxonomy shared by all solq modules."""

from __future__ import annotations


class SolqError(Exception):
    """Base class for every error raised by solq."""


class SchemaError(SolqError):
    """Construction or operator precondition violated (schemas, domains, names)."""


class EvalError(SolqError):
    """Runtime value error: unresolved symbols, type mismatch, broken lookup."""


class AggregateError(EvalError):
    """Aggregate undefined for its input (min/max over an empty group)."""


class NotComputableError(EvalError):
    """The requested value needs an enumeration we cannot perform."""


class CapExceededError(NotComputableError):
    """Finite but over the configured enumeration cap."""


class DnfError(SolqError):
    """Formula not convertible to disjunctive normal form, or guard tripped."""


class TranslateError(SolqError):
    """Candidate expression cannot be flattened (symbolic cell in a bad spot)."""


class ParseError(SolqError):
    """Surface syntax error, carries a source position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class ElaborationError(SolqError):
    """Name resolution or operator typing failed on a parsed program."""


class EmitError(SolqError):
    """Model cannot be expressed in the MiniZinc subset we emit."""


class SolverError(SolqError):
    """External solver missing, failed, or returned malformed output."""
