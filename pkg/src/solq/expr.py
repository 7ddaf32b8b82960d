"""Scalar values, the expression AST, evaluation, and aggregate functions.

Expressions are immutable trees shared by every layer: selection predicates,
characteristic functions, aggregate specs, and flattened constraint conjuncts.
Cells of symbolic relations may hold two deferred value kinds (SymRef,
SymLookup) which evaluation refuses until they are substituted away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .errors import AggregateError, EvalError

Scalar = bool | int | float | str


@dataclass(frozen=True)
class SymRef:
    """Deferred cell naming the (flat) attribute whose value it will take."""

    name: str

    def __repr__(self) -> str:
        return f"<{self.name}>"


@dataclass(frozen=True)
class SymLookup:
    """Deferred functional lookup.

    Stands for: project `attr` from the single row of relation `source`
    matching every (attribute, value expression) condition.
    """

    attr: str
    source: str
    conditions: tuple[tuple[str, "Expr"], ...]

    def __repr__(self) -> str:
        conds = " AND ".join(f"{a}={e!r}" for a, e in self.conditions)
        return f"lookup[{self.attr}](select[{conds}]({self.source}))"


SymValue = SymRef | SymLookup


# --------------------------------------------------------------------------
# expression nodes


class Expr:
    """Base class; all nodes are frozen dataclasses."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: object  # Scalar, or SymRef/SymLookup while still symbolic

    def __repr__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Attr(Expr):
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * /
    left: Expr
    right: Expr

    def __repr__(self) -> str:
        return f"({self.left!r} {self.op} {self.right!r})"


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def __repr__(self) -> str:
        return f"(-{self.operand!r})"


@dataclass(frozen=True)
class Func(Expr):
    """Numeric builtin: abs, pow, sqrt, exp, sin."""

    name: str
    args: tuple[Expr, ...]

    def __repr__(self) -> str:
        return f"{self.name}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Cmp(Expr):
    op: str  # = != < <= > >=
    left: Expr
    right: Expr

    def __repr__(self) -> str:
        return f"({self.left!r} {self.op} {self.right!r})"


@dataclass(frozen=True)
class Between(Expr):
    """Inclusive range test."""

    value: Expr
    low: Expr
    high: Expr

    def __repr__(self) -> str:
        return f"({self.value!r} BETWEEN {self.low!r} AND {self.high!r})"


@dataclass(frozen=True)
class And(Expr):
    items: tuple[Expr, ...]

    def __repr__(self) -> str:
        return "(" + " AND ".join(map(repr, self.items)) + ")"


@dataclass(frozen=True)
class Or(Expr):
    items: tuple[Expr, ...]

    def __repr__(self) -> str:
        return "(" + " OR ".join(map(repr, self.items)) + ")"


@dataclass(frozen=True)
class Not(Expr):
    item: Expr

    def __repr__(self) -> str:
        return f"(NOT {self.item!r})"


@dataclass(frozen=True)
class AggCall(Expr):
    """Aggregate application.

    Inside a grouped spec the args are per-row expressions folded over the
    group.  In a flattened constraint the args are the already-collected
    arguments (one per contributing row).
    """

    fn: str  # canonical lowercase aggregate name
    args: tuple[Expr, ...]

    def __repr__(self) -> str:
        return f"{AGGREGATES[self.fn].display}({', '.join(map(repr, self.args))})"


@dataclass(frozen=True)
class Rel(Expr):
    """Relation reference, valid only as the argument of hasSubset."""

    name: str

    def __repr__(self) -> str:
        return self.name


TRUE = Const(True)
FALSE = Const(False)


# --------------------------------------------------------------------------
# aggregate functions


@dataclass(frozen=True)
class AggFn:
    name: str  # canonical lowercase key
    display: str
    kind: str  # "boolean" | "orderable"


AGGREGATES: dict[str, AggFn] = {
    fn.name: fn
    for fn in (
        AggFn("bool_and", "Bool_And", "boolean"),
        AggFn("bool_or", "Bool_Or", "boolean"),
        AggFn("alldifferent", "AllDifferent", "boolean"),
        AggFn("hassubset", "hasSubset", "boolean"),
        AggFn("sum", "sum", "orderable"),
        AggFn("min", "min", "orderable"),
        AggFn("max", "max", "orderable"),
        AggFn("count", "count", "orderable"),
    )
}


def agg_fn(name: str) -> AggFn:
    """Look up an aggregate by name, case-insensitively."""
    fn = AGGREGATES.get(name.lower())
    if fn is None:
        raise EvalError(f"unknown aggregate {name!r}")
    return fn


def _require_bool(v: object, where: str) -> bool:
    if not isinstance(v, bool):
        raise EvalError(f"{where} expects booleans, got {v!r}")
    return v


def _require_num(v: object, where: str) -> int | float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise EvalError(f"{where} expects numbers, got {v!r}")
    return v


def _sum(values: Sequence[object]) -> int | float:
    nums = [_require_num(v, "sum") for v in values]
    if all(isinstance(v, int) for v in nums):
        return sum(nums)
    # fsum is correctly rounded, so the result is independent of row order
    return math.fsum(nums)


def apply_aggregate(
    fn: str | AggFn,
    rows: Sequence[tuple],
    subset: Sequence[tuple] | None = None,
) -> Scalar:
    """Fold an aggregate over collected argument tuples.

    Empty input yields the fold identity (Bool_And True, Bool_Or False,
    count 0, sum 0, AllDifferent True); min and max are undefined on it.
    hasSubset checks that every tuple of `subset` occurs among `rows`.
    """
    if isinstance(fn, str):
        fn = agg_fn(fn)
    name = fn.name
    if name == "count":
        return len(rows)
    if name == "hassubset":
        if subset is None:
            raise EvalError("hasSubset needs its subset relation")
        have = set(rows)
        return all(tuple(t) in have for t in subset)
    if name == "bool_and":
        return all(_require_bool(_only(r), "Bool_And") for r in rows)
    if name == "bool_or":
        return any(_require_bool(_only(r), "Bool_Or") for r in rows)
    if name == "alldifferent":
        return len(set(rows)) == len(rows)
    if name == "sum":
        return _sum([_only(r) for r in rows])
    if name in ("min", "max"):
        if not rows:
            raise AggregateError(f"{fn.display} is undefined over an empty group")
        vals = [_require_num(_only(r), fn.display) for r in rows]
        return min(vals) if name == "min" else max(vals)
    raise EvalError(f"unknown aggregate {name!r}")


def _only(row: tuple) -> object:
    if len(row) != 1:
        raise EvalError("this aggregate takes exactly one argument")
    return row[0]


# --------------------------------------------------------------------------
# evaluation

_FUNCS: dict[str, Callable[..., float]] = {
    "abs": abs,
    "pow": pow,
    "sqrt": math.sqrt,
    "exp": math.exp,
    "sin": math.sin,
}


def eval_scalar(expr: Expr, binding: Mapping[str, Scalar]) -> Scalar:
    """Evaluate a ground expression under an attribute binding.

    Symbolic leaves (SymRef, SymLookup) are an error here: they must have
    been substituted away before evaluation.
    """
    if isinstance(expr, Const):
        v = expr.value
        if isinstance(v, (SymRef, SymLookup)):
            raise EvalError(f"unresolved symbolic value {v!r}")
        return v  # type: ignore[return-value]
    if isinstance(expr, Attr):
        try:
            return binding[expr.name]
        except KeyError:
            raise EvalError(f"unbound attribute {expr.name!r}") from None
    if isinstance(expr, BinOp):
        lv = _require_num(eval_scalar(expr.left, binding), expr.op)
        rv = _require_num(eval_scalar(expr.right, binding), expr.op)
        if expr.op == "+":
            return lv + rv
        if expr.op == "-":
            return lv - rv
        if expr.op == "*":
            return lv * rv
        if expr.op == "/":
            if rv == 0:
                raise EvalError("division by zero")
            return lv / rv
        raise EvalError(f"unknown operator {expr.op!r}")
    if isinstance(expr, Neg):
        return -_require_num(eval_scalar(expr.operand, binding), "-")
    if isinstance(expr, Func):
        f = _FUNCS.get(expr.name)
        if f is None:
            raise EvalError(f"unknown function {expr.name!r}")
        args = [_require_num(eval_scalar(a, binding), expr.name) for a in expr.args]
        try:
            return f(*args)
        except (ValueError, OverflowError) as exc:
            raise EvalError(f"{expr.name}: {exc}") from None
    if isinstance(expr, Cmp):
        lv = eval_scalar(expr.left, binding)
        rv = eval_scalar(expr.right, binding)
        return _compare(expr.op, lv, rv)
    if isinstance(expr, Between):
        v = _require_num(eval_scalar(expr.value, binding), "BETWEEN")
        lo = _require_num(eval_scalar(expr.low, binding), "BETWEEN")
        hi = _require_num(eval_scalar(expr.high, binding), "BETWEEN")
        return lo <= v <= hi
    if isinstance(expr, And):
        return all(_require_bool(eval_scalar(i, binding), "AND") for i in expr.items)
    if isinstance(expr, Or):
        return any(_require_bool(eval_scalar(i, binding), "OR") for i in expr.items)
    if isinstance(expr, Not):
        return not _require_bool(eval_scalar(expr.item, binding), "NOT")
    if isinstance(expr, AggCall):
        # collected form: each argument contributes one row to the fold
        vals = [eval_scalar(a, binding) for a in expr.args]
        return apply_aggregate(expr.fn, [(v,) for v in vals])
    if isinstance(expr, Rel):
        raise EvalError("relation reference outside hasSubset")
    raise EvalError(f"cannot evaluate {expr!r}")


def _compare(op: str, lv: Scalar, rv: Scalar) -> bool:
    if op in ("=", "!="):
        same_kind = (
            isinstance(lv, bool) == isinstance(rv, bool)
            and isinstance(lv, str) == isinstance(rv, str)
        )
        if not same_kind:
            raise EvalError(f"cannot compare {lv!r} with {rv!r}")
        return (lv == rv) if op == "=" else (lv != rv)
    for v in (lv, rv):
        if isinstance(v, bool):
            raise EvalError("ordering is undefined for booleans")
    if isinstance(lv, str) != isinstance(rv, str):
        raise EvalError(f"cannot compare {lv!r} with {rv!r}")
    if op == "<":
        return lv < rv
    if op == "<=":
        return lv <= rv
    if op == ">":
        return lv > rv
    if op == ">=":
        return lv >= rv
    raise EvalError(f"unknown comparison {op!r}")


# --------------------------------------------------------------------------
# grouped evaluation (aggregate specs over actual rows)


def eval_group_expr(
    expr: Expr,
    rows: Sequence[Mapping[str, Scalar]],
    group_binding: Mapping[str, Scalar],
    catalog: Mapping[str, object] | None = None,
) -> Scalar:
    """Evaluate an aggregate spec over the rows of one group.

    Aggregate calls fold their per-row argument over `rows`; attribute
    references outside any aggregate must be grouping attributes.
    """
    if isinstance(expr, AggCall):
        fn = agg_fn(expr.fn)
        if fn.name == "count":
            if expr.args:
                raise EvalError("count takes no arguments")
            return len(rows)
        if fn.name == "hassubset":
            return _has_subset(expr, rows, catalog)
        collected = [
            tuple(eval_scalar(a, row) for a in expr.args) for row in rows
        ]
        return apply_aggregate(fn, collected)
    if isinstance(expr, Attr):
        if expr.name in group_binding:
            return group_binding[expr.name]
        raise EvalError(
            f"attribute {expr.name!r} used outside an aggregate is not grouped"
        )
    if isinstance(expr, Const):
        return eval_scalar(expr, {})
    if isinstance(expr, BinOp):
        return eval_scalar(
            BinOp(
                expr.op,
                Const(eval_group_expr(expr.left, rows, group_binding, catalog)),
                Const(eval_group_expr(expr.right, rows, group_binding, catalog)),
            ),
            {},
        )
    if isinstance(expr, Neg):
        return eval_scalar(
            Neg(Const(eval_group_expr(expr.operand, rows, group_binding, catalog))), {}
        )
    if isinstance(expr, Func):
        return eval_scalar(
            Func(
                expr.name,
                tuple(
                    Const(eval_group_expr(a, rows, group_binding, catalog))
                    for a in expr.args
                ),
            ),
            {},
        )
    if isinstance(expr, Cmp):
        return _compare(
            expr.op,
            eval_group_expr(expr.left, rows, group_binding, catalog),
            eval_group_expr(expr.right, rows, group_binding, catalog),
        )
    if isinstance(expr, Between):
        v = eval_group_expr(expr.value, rows, group_binding, catalog)
        lo = eval_group_expr(expr.low, rows, group_binding, catalog)
        hi = eval_group_expr(expr.high, rows, group_binding, catalog)
        return eval_scalar(Between(Const(v), Const(lo), Const(hi)), {})
    if isinstance(expr, And):
        return all(
            _require_bool(eval_group_expr(i, rows, group_binding, catalog), "AND")
            for i in expr.items
        )
    if isinstance(expr, Or):
        return any(
            _require_bool(eval_group_expr(i, rows, group_binding, catalog), "OR")
            for i in expr.items
        )
    if isinstance(expr, Not):
        return not _require_bool(
            eval_group_expr(expr.item, rows, group_binding, catalog), "NOT"
        )
    raise EvalError(f"cannot evaluate {expr!r} in a grouped spec")


def _has_subset(
    expr: AggCall,
    rows: Sequence[Mapping[str, Scalar]],
    catalog: Mapping[str, object] | None,
) -> bool:
    if len(expr.args) != 1 or not isinstance(expr.args[0], Rel):
        raise EvalError("hasSubset takes exactly one relation argument")
    name = expr.args[0].name
    if catalog is None or name not in catalog:
        raise EvalError(f"hasSubset: unknown relation {name!r}")
    subset = catalog[name]
    attrs = [a for a, _ in subset.schema]  # type: ignore[attr-defined]
    missing = [a for a in attrs if rows and a not in rows[0]]
    if missing:
        raise EvalError(f"hasSubset: attributes {missing} absent from the group")
    projected = [tuple(row[a] for a in attrs) for row in rows]
    return bool(apply_aggregate("hassubset", projected, subset=subset.tuples))  # type: ignore[attr-defined]


# --------------------------------------------------------------------------
# structural helpers


def children(expr: Expr) -> tuple[Expr, ...]:
    if isinstance(expr, BinOp):
        return (expr.left, expr.right)
    if isinstance(expr, Neg):
        return (expr.operand,)
    if isinstance(expr, (Func, AggCall, And, Or)):
        return tuple(expr.args if isinstance(expr, (Func, AggCall)) else expr.items)
    if isinstance(expr, Cmp):
        return (expr.left, expr.right)
    if isinstance(expr, Between):
        return (expr.value, expr.low, expr.high)
    if isinstance(expr, Not):
        return (expr.item,)
    return ()


def walk(expr: Expr) -> Iterable[Expr]:
    """Yield expr and every descendant, preorder."""
    stack = [expr]
    while stack:
        e = stack.pop()
        yield e
        stack.extend(reversed(children(e)))


def free_attrs(expr: Expr) -> frozenset[str]:
    return frozenset(e.name for e in walk(expr) if isinstance(e, Attr))


def has_symbolic(expr: Expr) -> bool:
    return any(
        isinstance(e, Const) and isinstance(e.value, (SymRef, SymLookup))
        for e in walk(expr)
    )


def contains_subtree(haystack: Expr, needle: Expr) -> bool:
    return any(e == needle for e in walk(haystack))


def substitute_attrs(expr: Expr, mapping: Mapping[str, str]) -> Expr:
    """Rename attribute references throughout an expression."""
    return map_expr(
        expr, lambda e: Attr(mapping.get(e.name, e.name)) if isinstance(e, Attr) else e
    )


def map_expr(expr: Expr, f: Callable[[Expr], Expr]) -> Expr:
    """Rebuild an expression bottom-up, applying f to every node."""
    if isinstance(expr, BinOp):
        rebuilt: Expr = BinOp(expr.op, map_expr(expr.left, f), map_expr(expr.right, f))
    elif isinstance(expr, Neg):
        rebuilt = Neg(map_expr(expr.operand, f))
    elif isinstance(expr, Func):
        rebuilt = Func(expr.name, tuple(map_expr(a, f) for a in expr.args))
    elif isinstance(expr, Cmp):
        rebuilt = Cmp(expr.op, map_expr(expr.left, f), map_expr(expr.right, f))
    elif isinstance(expr, Between):
        rebuilt = Between(
            map_expr(expr.value, f), map_expr(expr.low, f), map_expr(expr.high, f)
        )
    elif isinstance(expr, And):
        rebuilt = And(tuple(map_expr(i, f) for i in expr.items))
    elif isinstance(expr, Or):
        rebuilt = Or(tuple(map_expr(i, f) for i in expr.items))
    elif isinstance(expr, Not):
        rebuilt = Not(map_expr(expr.item, f))
    elif isinstance(expr, AggCall):
        rebuilt = AggCall(expr.fn, tuple(map_expr(a, f) for a in expr.args))
    else:
        rebuilt = expr
    return f(rebuilt)


def conjuncts(expr: Expr) -> list[Expr]:
    """Flatten nested conjunctions into a list of top-level conjuncts."""
    if isinstance(expr, And):
        out: list[Expr] = []
        for item in expr.items:
            out.extend(conjuncts(item))
        return out
    return [expr]


def is_boolean_shaped(expr: Expr) -> bool:
    """Cheap structural check that an expression can produce a boolean."""
    if isinstance(expr, (Cmp, Between, And, Or, Not)):
        return True
    if isinstance(expr, Const):
        return isinstance(expr.value, bool)
    if isinstance(expr, Attr):
        return True  # may be a BOOL attribute; checked at evaluation
    if isinstance(expr, AggCall):
        return agg_fn(expr.fn).kind == "boolean"
    return False
