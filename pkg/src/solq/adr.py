"""Attribute domains and the algebra of finite, extensional relations.

Relations are sets of typed tuples in a canonical (lexicographic) order.
Ordering and limiting step outside set semantics and therefore return a
plain tuple sequence instead of a Relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import EvalError, NotComputableError, SchemaError
from .expr import (
    Expr,
    Scalar,
    eval_group_expr,
    eval_scalar,
    free_attrs,
)

# --------------------------------------------------------------------------
# attribute domains


class AttrDomain:
    """Base class for attribute domains; all variants are frozen dataclasses."""

    __slots__ = ()

    def contains(self, v: Scalar) -> bool:
        raise NotImplementedError

    @property
    def is_finite(self) -> bool:
        return False

    def values(self) -> tuple[Scalar, ...]:
        raise NotComputableError(f"domain {self} is not finite")

    def coerce(self, v: Scalar) -> Scalar:
        """Adjust a raw value to the domain's carrier type (int -> float)."""
        return v


@dataclass(frozen=True)
class IntDom(AttrDomain):
    def contains(self, v: Scalar) -> bool:
        return isinstance(v, int) and not isinstance(v, bool)

    def __str__(self) -> str:
        return "INT"


@dataclass(frozen=True)
class FloatDom(AttrDomain):
    def contains(self, v: Scalar) -> bool:
        return isinstance(v, float)

    def coerce(self, v: Scalar) -> Scalar:
        if isinstance(v, int) and not isinstance(v, bool):
            return float(v)
        return v

    def __str__(self) -> str:
        return "FLOAT"


@dataclass(frozen=True)
class BoolDom(AttrDomain):
    def contains(self, v: Scalar) -> bool:
        return isinstance(v, bool)

    @property
    def is_finite(self) -> bool:
        return True

    def values(self) -> tuple[Scalar, ...]:
        return (False, True)

    def __str__(self) -> str:
        return "BOOL"


@dataclass(frozen=True)
class VarcharDom(AttrDomain):
    def contains(self, v: Scalar) -> bool:
        return isinstance(v, str)

    def __str__(self) -> str:
        return "VARCHAR"


@dataclass(frozen=True)
class EnumDom(AttrDomain):
    tags: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tags or len(set(self.tags)) != len(self.tags):
            raise SchemaError("enum needs distinct, non-empty tags")

    def contains(self, v: Scalar) -> bool:
        return isinstance(v, str) and v in self.tags

    @property
    def is_finite(self) -> bool:
        return True

    def values(self) -> tuple[Scalar, ...]:
        return tuple(sorted(self.tags))

    def __str__(self) -> str:
        return f"ENUM({', '.join(self.tags)})"


@dataclass(frozen=True)
class IntRange(AttrDomain):
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise SchemaError(f"empty range {self.lo}..{self.hi}")

    def contains(self, v: Scalar) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi

    @property
    def is_finite(self) -> bool:
        return True

    def values(self) -> tuple[Scalar, ...]:
        return tuple(range(self.lo, self.hi + 1))

    def __str__(self) -> str:
        return f"{self.lo}..{self.hi}"


@dataclass(frozen=True)
class FloatRange(AttrDomain):
    """Continuous interval; infinite, never enumerated."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise SchemaError(f"empty range {self.lo}..{self.hi}")

    def contains(self, v: Scalar) -> bool:
        return isinstance(v, float) and self.lo <= v <= self.hi

    def coerce(self, v: Scalar) -> Scalar:
        if isinstance(v, int) and not isinstance(v, bool):
            return float(v)
        return v

    def __str__(self) -> str:
        return f"{self.lo}..{self.hi}"


@dataclass(frozen=True)
class RefDom(AttrDomain):
    """Finite domain drawn from an existing relation's column.

    Resolved at construction time: `members` is the projected column.  The
    source name is retained for readable output when the reference was a
    plain catalog name.
    """

    members: tuple[Scalar, ...]
    source: str | None = None
    attr: str | None = None

    def __post_init__(self) -> None:
        if not self.members:
            raise SchemaError("reference domain is empty")
        kinds = {type(v) for v in self.members}
        if len(kinds) != 1:
            raise SchemaError("reference domain mixes value types")

    def contains(self, v: Scalar) -> bool:
        return any(v == m and type(v) is type(m) for m in self.members)

    @property
    def is_finite(self) -> bool:
        return True

    def values(self) -> tuple[Scalar, ...]:
        return tuple(sorted(self.members))

    def __str__(self) -> str:
        if self.source:
            return f"IN {self.source}"
        return "IN {" + ", ".join(repr(m) for m in sorted(self.members)) + "}"


Schema = tuple[tuple[str, AttrDomain], ...]


def check_schema(schema: Schema) -> None:
    names = [a for a, _ in schema]
    if len(set(names)) != len(names):
        raise SchemaError(f"duplicate attribute names in {names}")


# --------------------------------------------------------------------------
# relations


@dataclass(frozen=True)
class Relation:
    """Finite relation: named, typed, deduplicated, canonically ordered."""

    name: str | None
    schema: Schema
    tuples: tuple[tuple[Scalar, ...], ...] = field(default=())

    def __post_init__(self) -> None:
        check_schema(self.schema)
        doms = [d for _, d in self.schema]
        cleaned = set()
        for t in self.tuples:
            if len(t) != len(self.schema):
                raise SchemaError(
                    f"tuple {t!r} has {len(t)} cells, schema has {len(self.schema)}"
                )
            row = tuple(d.coerce(v) for d, v in zip(doms, t))
            for (a, d), v in zip(self.schema, row):
                if not d.contains(v):
                    raise SchemaError(f"value {v!r} outside domain {d} of {a!r}")
            cleaned.add(row)
        object.__setattr__(self, "tuples", tuple(sorted(cleaned, key=_row_key)))

    @property
    def attrs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.schema)

    def domain_of(self, attr: str) -> AttrDomain:
        for a, d in self.schema:
            if a == attr:
                return d
        raise SchemaError(f"no attribute {attr!r} in {self.attrs}")

    def rows(self) -> list[dict[str, Scalar]]:
        names = self.attrs
        return [dict(zip(names, t)) for t in self.tuples]

    def __len__(self) -> int:
        return len(self.tuples)


def _cell_key(v: Scalar) -> tuple:
    # one total order across the value kinds so heterogeneous schemas sort
    if isinstance(v, bool):
        return (0, v)
    if isinstance(v, (int, float)):
        return (1, v)
    return (2, v)


def _row_key(t: tuple[Scalar, ...]) -> tuple:
    return tuple(_cell_key(v) for v in t)


def construct(name: str | None, schema: Schema, rows: Iterable[Sequence[Scalar]]) -> Relation:
    """The extensional constructor: schema plus an explicit tuple set."""
    return Relation(name, tuple(schema), tuple(tuple(r) for r in rows))


# --------------------------------------------------------------------------
# operators


def _join_schemas(r: Relation, s: Relation) -> tuple[Schema, list[str]]:
    shared = [a for a in r.attrs if a in set(s.attrs)]
    for a in shared:
        if r.domain_of(a) != s.domain_of(a):
            raise SchemaError(
                f"shared attribute {a!r} has mismatched domains "
                f"({r.domain_of(a)} vs {s.domain_of(a)})"
            )
    schema = r.schema + tuple((a, d) for a, d in s.schema if a not in set(r.attrs))
    return schema, shared


def natural_join(r: Relation, s: Relation, name: str | None = None) -> Relation:
    """Natural join on shared attribute names (cross product when disjoint)."""
    schema, shared = _join_schemas(r, s)
    s_attrs = s.attrs
    s_extra = [i for i, a in enumerate(s_attrs) if a not in set(r.attrs)]
    key_idx_s = [s_attrs.index(a) for a in shared]
    key_idx_r = [r.attrs.index(a) for a in shared]
    buckets: dict[tuple, list[tuple]] = {}
    for t in s.tuples:
        buckets.setdefault(tuple(t[i] for i in key_idx_s), []).append(t)
    out = []
    for t in r.tuples:
        for u in buckets.get(tuple(t[i] for i in key_idx_r), ()):
            out.append(t + tuple(u[i] for i in s_extra))
    return Relation(name, schema, tuple(out))


def cross(r: Relation, s: Relation, name: str | None = None) -> Relation:
    if set(r.attrs) & set(s.attrs):
        raise SchemaError("cross product requires disjoint schemas")
    return natural_join(r, s, name)


def _require_same_schema(r: Relation, s: Relation, op: str) -> None:
    if r.schema != s.schema:
        raise SchemaError(f"{op} needs identical schemas ({r.attrs} vs {s.attrs})")


def union(r: Relation, s: Relation, name: str | None = None) -> Relation:
    _require_same_schema(r, s, "union")
    return Relation(name, r.schema, r.tuples + s.tuples)


def intersect(r: Relation, s: Relation, name: str | None = None) -> Relation:
    _require_same_schema(r, s, "intersect")
    keep = set(s.tuples)
    return Relation(name, r.schema, tuple(t for t in r.tuples if t in keep))


def difference(r: Relation, s: Relation, name: str | None = None) -> Relation:
    _require_same_schema(r, s, "difference")
    drop = set(s.tuples)
    return Relation(name, r.schema, tuple(t for t in r.tuples if t not in drop))


def select(r: Relation, predicate: Expr, name: str | None = None) -> Relation:
    unknown = free_attrs(predicate) - set(r.attrs)
    if unknown:
        raise SchemaError(f"selection references unknown attributes {sorted(unknown)}")
    names = r.attrs
    out = []
    for t in r.tuples:
        v = eval_scalar(predicate, dict(zip(names, t)))
        if not isinstance(v, bool):
            raise EvalError(f"selection predicate returned {v!r}, wanted a boolean")
        if v:
            out.append(t)
    return Relation(name, r.schema, tuple(out))


def project(r: Relation, attrs: Sequence[str], name: str | None = None) -> Relation:
    if not attrs:
        raise SchemaError("projection needs at least one attribute")
    if len(set(attrs)) != len(attrs):
        raise SchemaError("projection repeats an attribute")
    idx = [r.attrs.index(a) if a in r.attrs else -1 for a in attrs]
    if -1 in idx:
        missing = [a for a, i in zip(attrs, idx) if i == -1]
        raise SchemaError(f"projection on missing attributes {missing}")
    schema = tuple((a, r.domain_of(a)) for a in attrs)
    return Relation(name, schema, tuple(tuple(t[i] for i in idx) for t in r.tuples))


def rename(r: Relation, mapping: Mapping[str, str], name: str | None = None) -> Relation:
    for old in mapping:
        if old not in r.attrs:
            raise SchemaError(f"cannot rename missing attribute {old!r}")
    schema = tuple((mapping.get(a, a), d) for a, d in r.schema)
    check_schema(schema)
    return Relation(name, schema, r.tuples)


def group_aggregate(
    r: Relation,
    group_attrs: Sequence[str],
    specs: Sequence[tuple[Expr, str]],
    catalog: Mapping[str, Relation] | None = None,
    name: str | None = None,
) -> Relation:
    """Group by `group_attrs` and evaluate each (spec expression, result name).

    Grouping by no attributes folds the whole relation into a single row;
    over an empty relation that row carries the fold identities.
    """
    for a in group_attrs:
        if a not in r.attrs:
            raise SchemaError(f"cannot group by missing attribute {a!r}")
    if not specs:
        raise SchemaError("group_aggregate needs at least one aggregate spec")
    out_names = list(group_attrs) + [n for _, n in specs]
    if len(set(out_names)) != len(out_names):
        raise SchemaError(f"duplicate output attributes in {out_names}")

    rows = r.rows()
    groups: dict[tuple, list[dict[str, Scalar]]] = {}
    if group_attrs:
        for row in rows:
            groups.setdefault(tuple(row[a] for a in group_attrs), []).append(row)
    else:
        groups[()] = rows

    out_rows = []
    for key in sorted(groups, key=_row_key):
        grouped = groups[key]
        binding = dict(zip(group_attrs, key))
        cells = list(key)
        for spec, _ in specs:
            cells.append(eval_group_expr(spec, grouped, binding, catalog))
        out_rows.append(tuple(cells))

    schema: list[tuple[str, AttrDomain]] = [(a, r.domain_of(a)) for a in group_attrs]
    for i, (_, n) in enumerate(specs):
        col = [row[len(group_attrs) + i] for row in out_rows]
        schema.append((n, _infer_domain(col)))
    return Relation(name, tuple(schema), tuple(out_rows))


def _infer_domain(values: Sequence[Scalar]) -> AttrDomain:
    if any(isinstance(v, float) for v in values):
        return FloatDom()
    if all(isinstance(v, bool) for v in values) and values:
        return BoolDom()
    if all(isinstance(v, str) for v in values) and values:
        return VarcharDom()
    return IntDom()


def order_limit(
    r: Relation,
    order: Sequence[tuple[Expr, str]],
    limit: int | None = None,
) -> tuple[tuple[Scalar, ...], ...]:
    """Order tuples by the given (expression, ASC|DESC) keys, then truncate.

    Returns a sequence, not a Relation: the result is outside set semantics.
    Ties keep the canonical relation order.
    """
    names = r.attrs
    ordered = list(r.tuples)
    for key_expr, direction in reversed(list(order)):
        if direction not in ("ASC", "DESC"):
            raise SchemaError(f"order direction must be ASC or DESC, got {direction!r}")
        ordered.sort(
            key=lambda t: _cell_key(eval_scalar(key_expr, dict(zip(names, t)))),
            reverse=(direction == "DESC"),
        )
    if limit is not None:
        if limit < 0:
            raise SchemaError("limit must be non-negative")
        ordered = ordered[:limit]
    return tuple(ordered)
