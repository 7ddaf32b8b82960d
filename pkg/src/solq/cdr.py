"""Relations carried intensionally as a characteristic function over a schema.

All algebra on these is purely syntactic: operators combine the predicate
ASTs without evaluating anything, so the operand predicates stay embedded as
subtrees of the result.  Projection is the boundary back to extensional
relations and is the only place enumeration happens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from . import adr
from .adr import AttrDomain, Relation, Schema, check_schema
from .errors import EvalError, NotComputableError, SchemaError
from .expr import (
    And,
    Attr,
    BinOp,
    Cmp,
    Const,
    Expr,
    Neg,
    Not,
    Or,
    Scalar,
    conjuncts,
    eval_scalar,
    free_attrs,
    substitute_attrs,
)


@dataclass(frozen=True)
class CompleteRelation:
    """Schema plus characteristic function; possibly infinite extension."""

    name: str | None
    schema: Schema
    chi: Expr

    def __post_init__(self) -> None:
        check_schema(self.schema)
        unknown = free_attrs(self.chi) - set(self.attrs)
        if unknown:
            raise SchemaError(
                f"characteristic function references unknown attributes {sorted(unknown)}"
            )

    @property
    def attrs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.schema)

    def domain_of(self, attr: str) -> AttrDomain:
        for a, d in self.schema:
            if a == attr:
                return d
        raise SchemaError(f"no attribute {attr!r} in {self.attrs}")


def construct(name: str | None, schema: Schema, chi: Expr = Const(True)) -> CompleteRelation:
    return CompleteRelation(name, tuple(schema), chi)


# --------------------------------------------------------------------------
# syntactic operators


def _merged_schema(c: CompleteRelation, d: CompleteRelation) -> Schema:
    shared = set(c.attrs) & set(d.attrs)
    for a in shared:
        if c.domain_of(a) != d.domain_of(a):
            raise SchemaError(
                f"shared attribute {a!r} has mismatched domains "
                f"({c.domain_of(a)} vs {d.domain_of(a)})"
            )
    return c.schema + tuple((a, dom) for a, dom in d.schema if a not in set(c.attrs))


def natural_join(
    c: CompleteRelation, d: CompleteRelation, name: str | None = None
) -> CompleteRelation:
    return CompleteRelation(name, _merged_schema(c, d), And((c.chi, d.chi)))


def cross(c: CompleteRelation, d: CompleteRelation, name: str | None = None) -> CompleteRelation:
    if set(c.attrs) & set(d.attrs):
        raise SchemaError("cross product requires disjoint schemas")
    return natural_join(c, d, name)


def intersect(
    c: CompleteRelation, d: CompleteRelation, name: str | None = None
) -> CompleteRelation:
    return CompleteRelation(name, _merged_schema(c, d), And((c.chi, d.chi)))


def difference(
    c: CompleteRelation, d: CompleteRelation, name: str | None = None
) -> CompleteRelation:
    _require_same_attrs(c, d, "difference")
    return CompleteRelation(name, c.schema, And((c.chi, Not(d.chi))))


def union(c: CompleteRelation, d: CompleteRelation, name: str | None = None) -> CompleteRelation:
    _require_same_attrs(c, d, "union")
    return CompleteRelation(name, c.schema, Or((c.chi, d.chi)))


def _require_same_attrs(c: CompleteRelation, d: CompleteRelation, op: str) -> None:
    if set(c.attrs) != set(d.attrs):
        raise SchemaError(f"{op} needs the same attribute set ({c.attrs} vs {d.attrs})")
    for a in c.attrs:
        if c.domain_of(a) != d.domain_of(a):
            raise SchemaError(f"{op}: attribute {a!r} has mismatched domains")


def select(c: CompleteRelation, predicate: Expr, name: str | None = None) -> CompleteRelation:
    unknown = free_attrs(predicate) - set(c.attrs)
    if unknown:
        raise SchemaError(f"selection references unknown attributes {sorted(unknown)}")
    return CompleteRelation(name, c.schema, And((c.chi, predicate)))


def rename(
    c: CompleteRelation, mapping: Mapping[str, str], name: str | None = None
) -> CompleteRelation:
    for old in mapping:
        if old not in c.attrs:
            raise SchemaError(f"cannot rename missing attribute {old!r}")
    schema = tuple((mapping.get(a, a), d) for a, d in c.schema)
    return CompleteRelation(name, schema, substitute_attrs(c.chi, dict(mapping)))


def adr_as_cdr(r: Relation, name: str | None = None) -> CompleteRelation:
    """Encode a finite relation as a disjunction of full assignments."""
    if not r.tuples:
        return CompleteRelation(name or r.name, r.schema, Const(False))
    disjuncts = []
    for t in r.tuples:
        atoms = tuple(Cmp("=", Attr(a), Const(v)) for (a, _), v in zip(r.schema, t))
        disjuncts.append(atoms[0] if len(atoms) == 1 else And(atoms))
    chi: Expr = disjuncts[0] if len(disjuncts) == 1 else Or(tuple(disjuncts))
    return CompleteRelation(name or r.name, r.schema, chi)


# --------------------------------------------------------------------------
# equality propagation (used to pin infinite attributes before enumerating)


def propagate_equalities(
    chi: Expr, binding: dict[str, Scalar], schema: Schema
) -> dict[str, Scalar]:
    """Extend a partial binding using top-level equality conjuncts.

    Repeatedly solves conjuncts with exactly one unbound attribute, inverting
    the four arithmetic operators and unary minus.  Solved values are checked
    against their domains.  Deeper reasoning is out of scope.
    """
    doms = dict(schema)
    parts = conjuncts(chi)
    binding = dict(binding)
    progress = True
    while progress:
        progress = False
        for part in parts:
            if not (isinstance(part, Cmp) and part.op == "="):
                continue
            unknowns = (free_attrs(part.left) | free_attrs(part.right)) - binding.keys()
            if len(unknowns) != 1:
                continue
            target = next(iter(unknowns))
            value = _solve_for(part.left, part.right, target, binding)
            if value is None:
                continue
            dom = doms[target]
            value = dom.coerce(value)
            if not dom.contains(value):
                raise EvalError(
                    f"propagated value {value!r} falls outside domain {dom} of {target!r}"
                )
            binding[target] = value
            progress = True
    return binding


def _solve_for(
    left: Expr, right: Expr, target: str, binding: Mapping[str, Scalar]
) -> Scalar | None:
    if target in free_attrs(left):
        with_t, without_t = left, right
    else:
        with_t, without_t = right, left
    if target in free_attrs(without_t):
        return None
    try:
        value: Scalar = eval_scalar(without_t, binding)
    except EvalError:
        return None
    # unwrap the side containing the target until the bare attribute remains
    e = with_t
    while not isinstance(e, Attr):
        if isinstance(e, Neg):
            value = -_num_or_none(value) if _num_or_none(value) is not None else None
            if value is None:
                return None
            e = e.operand
            continue
        if not isinstance(e, BinOp):
            return None
        in_left = target in free_attrs(e.left)
        other = e.right if in_left else e.left
        if target in free_attrs(other):
            return None
        try:
            ov = eval_scalar(other, binding)
        except EvalError:
            return None
        n_value, n_ov = _num_or_none(value), _num_or_none(ov)
        if n_value is None or n_ov is None:
            return None
        if e.op == "+":
            value = n_value - n_ov
        elif e.op == "*":
            if n_ov == 0:
                return None
            value = n_value / n_ov
        elif e.op == "-":
            value = (n_value + n_ov) if in_left else (n_ov - n_value)
        elif e.op == "/":
            if in_left:
                value = n_value * n_ov
            else:
                if n_value == 0:
                    return None
                value = n_ov / n_value
        else:
            return None
        e = e.left if in_left else e.right
    if e.name != target:
        return None
    return value


def _num_or_none(v: object) -> int | float | None:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        return None
    return v


# --------------------------------------------------------------------------
# evaluation boundary


def project_eval(
    c: CompleteRelation,
    attrs: Sequence[str],
    order: Sequence[tuple[Expr, str]] | None = None,
    limit: int | None = None,
    cap: int = 10**7,
    name: str | None = None,
) -> Relation:
    """Enumerate the satisfying tuples and project.

    Every attribute must either have a finite domain or be pinned to a single
    value by equality propagation.  With an order (and optional limit) the
    top tuples under the objective are selected before projecting.
    """
    from . import evaluate  # local import: evaluation sits above this layer

    assignments = evaluate.enumerate_assignments(c, cap=cap)
    if order or limit is not None:
        full_schema = c.attrs
        rel = Relation(None, c.schema, tuple(tuple(a[x] for x in full_schema) for a in assignments))
        seq = adr.order_limit(rel, order or [], limit)
        rows = [dict(zip(full_schema, t)) for t in seq]
    else:
        rows = assignments
    schema = tuple((a, c.domain_of(a)) for a in attrs)
    for a in attrs:
        if a not in c.attrs:
            raise SchemaError(f"projection on missing attribute {a!r}")
    return Relation(name, schema, tuple(tuple(row[a] for a in attrs) for row in rows))


def join_with_adr(
    r: Relation, c: CompleteRelation, name: str | None = None, cap: int = 10**7
) -> Relation:
    """Join a finite relation against a characteristic-function relation.

    Works in any direction the data allows: per tuple of r, shared attributes
    bind, equalities propagate, and any attributes still free must have
    finite domains to enumerate.
    """
    shared = [a for a in r.attrs if a in set(c.attrs)]
    for a in shared:
        if r.domain_of(a) != c.domain_of(a):
            raise SchemaError(
                f"shared attribute {a!r} has mismatched domains "
                f"({r.domain_of(a)} vs {c.domain_of(a)})"
            )
    extra = [a for a in c.attrs if a not in set(r.attrs)]
    schema = r.schema + tuple((a, c.domain_of(a)) for a in extra)
    out = []
    names = r.attrs
    for t in r.tuples:
        base = {a: v for a, v in zip(names, t) if a in set(c.attrs)}
        for completion in _completions(c, base, cap):
            out.append(t + tuple(completion[a] for a in extra))
    return Relation(name, schema, tuple(out))


def _completions(
    c: CompleteRelation, binding: dict[str, Scalar], cap: int
) -> list[dict[str, Scalar]]:
    for a, v in binding.items():
        if not c.domain_of(a).contains(c.domain_of(a).coerce(v)):
            return []
    binding = {a: c.domain_of(a).coerce(v) for a, v in binding.items()}
    bound = propagate_equalities(c.chi, binding, c.schema)
    free = [a for a in c.attrs if a not in bound]
    infinite = [a for a in free if not c.domain_of(a).is_finite]
    if infinite:
        raise NotComputableError(
            f"attributes {infinite} are neither finite nor pinned by equalities"
        )
    import itertools

    sizes = 1
    for a in free:
        sizes *= len(c.domain_of(a).values())
        if sizes > cap:
            raise NotComputableError(f"enumeration exceeds cap ({cap})")
    out = []
    for combo in itertools.product(*(c.domain_of(a).values() for a in free)):
        full = dict(bound)
        full.update(zip(free, combo))
        v = eval_scalar(c.chi, full)
        if not isinstance(v, bool):
            raise EvalError(f"characteristic function returned {v!r}, wanted a boolean")
        if v:
            out.append(full)
    return out


def equivalent(
    c: CompleteRelation,
    d: CompleteRelation,
    probes: Mapping[str, Sequence[Scalar]],
) -> bool:
    """Pointwise agreement of the two characteristic functions on a probe grid."""
    if set(c.attrs) != set(d.attrs):
        return False
    attrs = list(c.attrs)
    missing = [a for a in attrs if a not in probes]
    if missing:
        raise SchemaError(f"no probe values for attributes {missing}")
    import itertools

    coerced = {a: [c.domain_of(a).coerce(v) for v in probes[a]] for a in attrs}
    for combo in itertools.product(*(coerced[a] for a in attrs)):
        binding = dict(zip(attrs, combo))
        if eval_scalar(c.chi, binding) != eval_scalar(d.chi, binding):
            return False
    return True
