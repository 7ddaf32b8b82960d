"""Relational algebra for constraint and optimization queries.

Three layers share one expression language: finite data relations (adr),
complete relations defined by a characteristic function (cdr), and solution
sets whose candidates extend a base relation with decision values (solset).
Queries flatten to a single complete relation (translate) and run either by
enumeration (evaluate) or through an emitted MiniZinc model (mzn).  The
surface/elaborate/cli modules wrap it all in a small textual language.
"""

from .adr import Relation
from .cdr import CompleteRelation
from .errors import (
    CapExceededError,
    ElaborationError,
    EmitError,
    EvalError,
    NotComputableError,
    ParseError,
    SchemaError,
    SolqError,
    SolverError,
    TranslateError,
)
from .evaluate import EvalOutcome, QueryClass, run_projection
from .solset import RankedQuery, SolutionSet
from .translate import FlatForm, translate_query

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "CompleteRelation",
    "ElaborationError",
    "EmitError",
    "EvalError",
    "EvalOutcome",
    "FlatForm",
    "NotComputableError",
    "ParseError",
    "QueryClass",
    "RankedQuery",
    "Relation",
    "SchemaError",
    "SolqError",
    "SolutionSet",
    "SolverError",
    "TranslateError",
    "translate_query",
    "run_projection",
    "__version__",
]
