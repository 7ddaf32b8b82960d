"""Flattening translation from solution-set queries to constraint form.

The translation replays a restriction's candidate expression over a symbolic
candidate: one replica of each decision attribute per base tuple.  Joins
against stored relations keep their meaning through a functional-dependency
encoding (matched attributes stay symbolic, dependent attributes become
deferred lookups), grouping collects per-row argument expressions, and
aggregates over collected arguments either fold (all constants), expand
(conjunction, disjunction, subset containment), or survive as n-ary calls.
The result is one constraint formula over the replica attributes plus the
recipe (symbolic rows) to rebuild candidate relations from assignments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from . import cdr as cdr_mod
from .adr import AttrDomain, Relation, Schema, _row_key
from .cdr import CompleteRelation
from .errors import EvalError, NotComputableError, SchemaError, TranslateError
from .expr import (
    AggCall,
    And,
    Attr,
    BinOp,
    Cmp,
    Const,
    Expr,
    Func,
    Not,
    Or,
    Rel,
    Scalar,
    SymLookup,
    SymRef,
    agg_fn,
    apply_aggregate,
    eval_scalar,
    free_attrs,
    has_symbolic,
    map_expr,
    walk,
)
from .solset import (
    CandidateRef,
    ChiAnd,
    ChiConst,
    ChiExpr,
    ChiNot,
    ChiOr,
    GammaAtom,
    GroupAgg,
    IExpr,
    JoinRel,
    Project,
    RankedQuery,
    RenameI,
    Select,
    SolutionSet,
)

Cell = object  # Scalar | SymRef | SymLookup | Expr


@dataclass(frozen=True)
class SymTable:
    """Rows over a schema whose cells may be symbolic."""

    schema: tuple[tuple[str, AttrDomain | None], ...]
    rows: tuple[tuple[Cell, ...], ...]

    @property
    def attrs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.schema)

    def row_dicts(self) -> list[dict[str, Cell]]:
        names = self.attrs
        return [dict(zip(names, r)) for r in self.rows]


@dataclass(frozen=True)
class FlatForm:
    """A flattened query: constraint relation plus reconstruction data."""

    flat: CompleteRelation  # replica attributes and the full constraint
    base: Relation
    sym: SymTable  # the symbolic candidate (base cells + replica refs)
    flat_names: tuple[tuple[tuple[str, int], str], ...]  # (attr, 1-based idx) -> name
    direction: str | None = None
    objective: Expr | None = None  # over replica attributes
    objective_name: str | None = None
    objective_terms: tuple[Expr, ...] | None = None  # per symbolic row
    limit: int | None = None

    @property
    def flat_attrs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.flat.schema)


def flat_attr_names(u: SolutionSet) -> tuple[tuple[tuple[str, int], str], ...]:
    """Replica names: `<attr><i>` per decision attribute and base position.

    Base positions follow the canonical base-tuple order.  Collisions with
    base attributes or earlier replicas get `_` suffixes.
    """
    taken = set(u.base.attrs)
    out = []
    n = len(u.base)
    for a in u.decision.attrs:
        for i in range(1, n + 1):
            name = f"{a}{i}"
            while name in taken:
                name += "_"
            taken.add(name)
            out.append(((a, i), name))
    return tuple(out)


def build_flat(
    u: SolutionSet, names: tuple[tuple[tuple[str, int], str], ...] | None = None
) -> tuple[Schema, list[Expr]]:
    """Replica schema plus the per-replica domain conjuncts."""
    names = names or flat_attr_names(u)
    lookup = dict(names)
    n = len(u.base)
    schema = tuple(
        (lookup[(a, i)], u.decision.domain_of(a))
        for a in u.decision.attrs
        for i in range(1, n + 1)
    )
    conjuncts: list[Expr] = []
    if u.decision.chi != Const(True):
        for i in range(1, n + 1):
            mapping = {a: lookup[(a, i)] for a in u.decision.attrs}
            conjuncts.append(_rename_attrs(u.decision.chi, mapping))
    return schema, conjuncts


def _rename_attrs(e: Expr, mapping: Mapping[str, str]) -> Expr:
    return map_expr(
        e, lambda x: Attr(mapping.get(x.name, x.name)) if isinstance(x, Attr) else x
    )


def build_sym(
    u: SolutionSet, names: tuple[tuple[tuple[str, int], str], ...] | None = None
) -> SymTable:
    """The symbolic candidate: base cells are actual values, decision cells
    reference the replica attribute for their base position."""
    names = names or flat_attr_names(u)
    lookup = dict(names)
    schema = tuple(u.base.schema) + tuple(u.decision.schema)
    rows = []
    for i, bt in enumerate(u.base.tuples, start=1):
        rows.append(bt + tuple(SymRef(lookup[(a, i)]) for a in u.decision.attrs))
    return SymTable(schema, tuple(rows))


def encode_fd_lookup(rel: Relation, matched: Sequence[str]) -> SymTable:
    """Encode a relation as one symbolic row keyed by the matched attributes.

    Matched cells are placeholders named after their attribute; every other
    cell defers to a lookup that selects on the placeholders.  Joining this
    row substitutes the placeholders with the partner's cells, which keeps
    the join's cardinality at the partner's row count (the relation must be
    functional on the matched attributes; violations surface on lookup).
    """
    if rel.name is None:
        raise TranslateError("functional-dependency encoding needs a named relation")
    for m in matched:
        if m not in rel.attrs:
            raise SchemaError(f"matched attribute {m!r} missing from {rel.name}")
    conditions = tuple((m, Const(SymRef(m))) for m in matched)
    cells: list[Cell] = []
    for a in rel.attrs:
        if a in matched:
            cells.append(SymRef(a))
        else:
            cells.append(SymLookup(a, rel.name, conditions))
    return SymTable(rel.schema, (tuple(cells),))


# --------------------------------------------------------------------------
# candidate-expression translation


class Translator:
    def __init__(
        self,
        sym: SymTable,
        catalog: Mapping[str, object],
        cap: int = 10**7,
    ) -> None:
        self.sym = sym
        self.catalog = catalog
        self.cap = cap

    # ---- candidate expressions

    def iexpr(self, body: IExpr) -> SymTable:
        if isinstance(body, CandidateRef):
            return self.sym
        if isinstance(body, JoinRel):
            child = self.iexpr(body.child)
            other = self.catalog.get(body.relation)
            if other is None:
                raise TranslateError(f"unknown relation {body.relation!r}")
            return self._join(child, other, body.relation)
        if isinstance(body, Select):
            return self._select(self.iexpr(body.child), body.predicate)
        if isinstance(body, Project):
            return self._project(self.iexpr(body.child), body.attrs)
        if isinstance(body, RenameI):
            return self._rename(self.iexpr(body.child), dict(body.mapping))
        if isinstance(body, GroupAgg):
            return self._group(self.iexpr(body.child), body.grouping, body.specs)
        raise TranslateError(f"unknown candidate expression node {body!r}")

    def _join(self, table: SymTable, other: object, name: str) -> SymTable:
        if isinstance(other, CompleteRelation):
            return self._join_cdr(table, other, name)
        if not isinstance(other, Relation):
            raise TranslateError(f"{name!r} is not joinable inside a candidate expression")
        shared = [a for a in table.attrs if a in set(other.attrs)]
        symbolic_key = any(
            not _is_scalar(row[a]) for row in table.row_dicts() for a in shared
        )
        if symbolic_key:
            return self._join_fd(table, other, shared)
        return self._join_plain(table, other, shared)

    def _join_cdr(self, table: SymTable, other: CompleteRelation, name: str) -> SymTable:
        shared = [a for a in table.attrs if a in set(other.attrs)]
        symbolic_key = any(
            not _is_scalar(row[a]) for row in table.row_dicts() for a in shared
        )
        if symbolic_key:
            # materialize, then use the functional-dependency route
            infinite = [a for a in other.attrs if not other.domain_of(a).is_finite]
            try:
                rel = cdr_mod.project_eval(other, other.attrs, cap=self.cap, name=name)
            except NotComputableError:
                raise NotComputableError(
                    f"join with {name!r} matches on symbolic attributes but its "
                    f"attributes {infinite} cannot be enumerated"
                ) from None
            return self._join_fd(table, rel, shared)
        # constant keys: complete each row through the characteristic function
        extra = [a for a in other.attrs if a not in set(table.attrs)]
        schema = table.schema + tuple((a, other.domain_of(a)) for a in extra)
        rows = []
        for row in table.row_dicts():
            binding = {a: row[a] for a in shared}
            for completion in cdr_mod._completions(other, binding, self.cap):
                rows.append(
                    tuple(row[a] for a in table.attrs)
                    + tuple(completion[a] for a in extra)
                )
        return SymTable(schema, tuple(rows))

    def _join_plain(self, table: SymTable, rel: Relation, shared: list[str]) -> SymTable:
        extra = [a for a in rel.attrs if a not in set(table.attrs)]
        schema = table.schema + tuple((a, rel.domain_of(a)) for a in extra)
        buckets: dict[tuple, list[tuple]] = {}
        key_idx = [rel.attrs.index(a) for a in shared]
        extra_idx = [rel.attrs.index(a) for a in extra]
        for t in rel.tuples:
            buckets.setdefault(tuple(t[i] for i in key_idx), []).append(t)
        rows = []
        for row in table.row_dicts():
            key = tuple(row[a] for a in shared)
            for t in buckets.get(key, ()):
                rows.append(
                    tuple(row[a] for a in table.attrs) + tuple(t[i] for i in extra_idx)
                )
        return SymTable(schema, tuple(rows))

    def _join_fd(self, table: SymTable, rel: Relation, shared: list[str]) -> SymTable:
        if not shared:
            raise TranslateError(f"functional-dependency join with {rel.name} needs shared attributes")
        encoded = encode_fd_lookup(rel, shared)
        extra = [a for a in rel.attrs if a not in set(table.attrs)]
        schema = table.schema + tuple((a, rel.domain_of(a)) for a in extra)
        enc_row = encoded.row_dicts()[0]
        rows = []
        for row in table.row_dicts():
            repl = {m: row[m] for m in shared}
            cells = [row[a] for a in table.attrs]
            if all(_is_scalar(c) for c in repl.values()):
                # constant key: the lookup resolves right now
                match = [
                    t
                    for t in rel.tuples
                    if all(t[rel.attrs.index(m)] == repl[m] for m in shared)
                ]
                if len(match) != 1:
                    raise EvalError(
                        f"functional dependency violated by data: key "
                        f"{repl!r} matches {len(match)} rows of {rel.name}"
                    )
                for a in extra:
                    cells.append(match[0][rel.attrs.index(a)])
            else:
                for a in extra:
                    cells.append(_substitute_placeholders(enc_row[a], repl))
            rows.append(tuple(cells))
        return SymTable(schema, tuple(rows))

    def _select(self, table: SymTable, predicate: Expr) -> SymTable:
        needed = free_attrs(predicate)
        missing = needed - set(table.attrs)
        if missing:
            raise SchemaError(f"selection references unknown attributes {sorted(missing)}")
        rows = []
        for row in table.row_dicts():
            sym_used = [a for a in needed if not _is_scalar(row[a])]
            if sym_used:
                raise TranslateError(
                    f"selection on symbolic attributes {sorted(sym_used)} is not supported"
                )
            v = eval_scalar(predicate, {a: row[a] for a in needed})
            if not isinstance(v, bool):
                raise EvalError(f"selection predicate returned {v!r}, wanted a boolean")
            if v:
                rows.append(tuple(row[a] for a in table.attrs))
        return SymTable(table.schema, tuple(rows))

    def _project(self, table: SymTable, attrs: tuple[str, ...]) -> SymTable:
        for a in attrs:
            if a not in table.attrs:
                raise SchemaError(f"projection on missing attribute {a!r}")
        idx = [table.attrs.index(a) for a in attrs]
        schema = tuple(table.schema[i] for i in idx)
        rows: list[tuple[Cell, ...]] = []
        for r in table.rows:
            row = tuple(r[i] for i in idx)
            if row not in rows:  # syntactically identical rows are duplicates
                rows.append(row)
        return SymTable(schema, tuple(rows))

    def _rename(self, table: SymTable, mapping: dict[str, str]) -> SymTable:
        schema = tuple((mapping.get(a, a), d) for a, d in table.schema)
        names = [a for a, _ in schema]
        if len(set(names)) != len(names):
            raise SchemaError(f"rename collides attributes: {names}")
        return SymTable(schema, table.rows)

    def _group(
        self,
        table: SymTable,
        grouping: tuple[str, ...],
        specs: tuple[tuple[Expr, str], ...],
    ) -> SymTable:
        for a in grouping:
            if a not in table.attrs:
                raise SchemaError(f"cannot group by missing attribute {a!r}")
        groups: dict[tuple, list[dict[str, Cell]]] = {}
        for row in table.row_dicts():
            key = tuple(row[a] for a in grouping)
            if any(not _is_scalar(k) for k in key):
                raise TranslateError("cannot group by a symbolic attribute")
            groups.setdefault(key, []).append(row)
        schema = tuple((a, d) for a, d in table.schema if a in grouping)
        schema = tuple(sorted(schema, key=lambda ad: grouping.index(ad[0])))
        schema += tuple((n, None) for _, n in specs)
        rows = []
        for key in sorted(groups, key=_row_key):
            rows.append(
                tuple(key)
                + tuple(
                    self.spec(spec, groups[key], dict(zip(grouping, key)))
                    for spec, _ in specs
                )
            )
        return SymTable(schema, tuple(rows))

    # ---- aggregate specs over symbolic rows

    def spec(
        self,
        expr: Expr,
        rows: Sequence[Mapping[str, Cell]],
        binding: Mapping[str, Scalar],
    ) -> Expr:
        out = self._spec(expr, rows, binding)
        return _fold_if_ground(out)

    def _spec(
        self,
        expr: Expr,
        rows: Sequence[Mapping[str, Cell]],
        binding: Mapping[str, Scalar],
    ) -> Expr:
        rebuilt = map_expr(
            expr,
            lambda e: self._spec_agg(e, rows, binding) if isinstance(e, AggCall) else e,
        )
        # any attribute still free must be a grouping attribute
        for name in sorted(free_attrs(rebuilt)):
            if name not in binding:
                raise TranslateError(
                    f"attribute {name!r} used outside an aggregate is not grouped"
                )
            rebuilt = _rename_to_const(rebuilt, name, binding[name])
        return rebuilt

    def _spec_agg(
        self,
        expr: AggCall,
        rows: Sequence[Mapping[str, Cell]],
        binding: Mapping[str, Scalar],
    ) -> Expr:
        fn = agg_fn(expr.fn)
        if fn.name == "count":
            if expr.args:
                raise TranslateError("count takes no arguments")
            return Const(len(rows))
        if fn.name == "hassubset":
            return self._expand_subset(expr, rows)
        if len(expr.args) != 1:
            raise TranslateError(
                f"{fn.display} over a symbolic group supports exactly one argument"
            )
        collected = [_substitute_row(expr.args[0], row) for row in rows]
        if all(isinstance(c, Const) and _is_scalar(c.value) for c in collected):
            return Const(
                apply_aggregate(fn, [(c.value,) for c in collected])  # type: ignore[misc]
            )
        if fn.name == "bool_and":
            return collected[0] if len(collected) == 1 else And(tuple(collected))
        if fn.name == "bool_or":
            return collected[0] if len(collected) == 1 else Or(tuple(collected))
        if fn.name == "sum":
            if all(_plain_term(c) for c in collected):
                acc = collected[0]
                for c in collected[1:]:
                    acc = BinOp("+", acc, c)
                return acc
            return AggCall("sum", tuple(collected))
        return AggCall(fn.name, tuple(collected))

    def _expand_subset(self, expr: AggCall, rows: Sequence[Mapping[str, Cell]]) -> Expr:
        if len(expr.args) != 1 or not isinstance(expr.args[0], Rel):
            raise TranslateError("hasSubset takes exactly one relation argument")
        name = expr.args[0].name
        subset = self.catalog.get(name)
        if isinstance(subset, CompleteRelation):
            subset = cdr_mod.project_eval(subset, subset.attrs, cap=self.cap, name=name)
        if not isinstance(subset, Relation):
            raise TranslateError(f"hasSubset: unknown relation {name!r}")
        attrs = subset.attrs
        for a in attrs:
            if rows and a not in rows[0]:
                raise TranslateError(f"hasSubset: attribute {a!r} absent from the group")
        terms = []
        for t in subset.tuples:
            alternatives = []
            for row in rows:
                eqs = []
                ok = True
                for a, v in zip(attrs, t):
                    c = row[a]
                    if _is_scalar(c):
                        if c != v:
                            ok = False
                            break
                    else:
                        eqs.append(Cmp("=", _cell_expr(c), Const(v)))
                if ok:
                    alternatives.append(And(tuple(eqs)) if len(eqs) > 1 else (eqs[0] if eqs else Const(True)))
            if not alternatives:
                terms.append(Const(False))
            else:
                terms.append(Or(tuple(alternatives)) if len(alternatives) > 1 else alternatives[0])
        if not terms:
            return Const(True)
        return And(tuple(terms)) if len(terms) > 1 else terms[0]


def _is_scalar(c: Cell) -> bool:
    return isinstance(c, (bool, int, float, str))


def _cell_expr(c: Cell) -> Expr:
    if isinstance(c, Expr):
        return c
    return Const(c)


def _rename_to_const(expr: Expr, name: str, value: Scalar) -> Expr:
    return map_expr(
        expr,
        lambda e: Const(value) if isinstance(e, Attr) and e.name == name else e,
    )


def _ground_const(e: Expr) -> bool:
    return isinstance(e, Const) and _is_scalar(e.value)


def _substitute_row(expr: Expr, row: Mapping[str, Cell]) -> Expr:
    def repl(e: Expr) -> Expr:
        if isinstance(e, Attr):
            if e.name not in row:
                raise TranslateError(f"unknown attribute {e.name!r} in aggregate argument")
            return _cell_expr(row[e.name])
        if isinstance(e, BinOp) and e.op == "*":
            # constants read better as coefficients
            if _ground_const(e.right) and not _ground_const(e.left):
                return BinOp("*", e.right, e.left)
        return e

    return _fold_if_ground(map_expr(expr, repl))


def _fold_if_ground(expr: Expr) -> Expr:
    if isinstance(expr, Const):
        return expr
    if has_symbolic(expr) or free_attrs(expr):
        return expr
    if any(isinstance(e, (AggCall, Rel)) for e in walk(expr)):
        return expr
    try:
        return Const(eval_scalar(expr, {}))
    except EvalError:
        return expr


def _plain_term(e: Expr) -> bool:
    """True when a collected sum argument is simple arithmetic over replicas
    and constants; such sums fold to `+` chains, anything richer keeps the
    n-ary call form."""
    for node in walk(e):
        if isinstance(node, (Func, AggCall)):
            return False
        if isinstance(node, Const) and isinstance(node.value, SymLookup):
            return False
    return True


def _substitute_placeholders(cell: Cell, repl: Mapping[str, Cell]) -> Cell:
    if isinstance(cell, SymRef) and cell.name in repl:
        return repl[cell.name]
    if isinstance(cell, SymLookup):
        conds = tuple(
            (a, _subst_placeholder_expr(e, repl)) for a, e in cell.conditions
        )
        return SymLookup(cell.attr, cell.source, conds)
    return cell


def _subst_placeholder_expr(e: Expr, repl: Mapping[str, Cell]) -> Expr:
    def f(x: Expr) -> Expr:
        if isinstance(x, Const) and isinstance(x.value, SymRef) and x.value.name in repl:
            return _cell_expr(repl[x.value.name])
        return x

    return map_expr(e, f)


# --------------------------------------------------------------------------
# whole-query translation


def _refs_to_attrs(e: Expr) -> Expr:
    """Final form: replica references become attributes of the flat relation.

    During folding the replicas travel as constants so the machinery can
    tell them from grouping attributes; the finished constraint speaks the
    flat schema directly.  Lookup cells stay symbolic (the evaluation
    backends lower them), but their key expressions are rewritten too.
    """

    def swap(node: Expr) -> Expr:
        if isinstance(node, Const):
            v = node.value
            if isinstance(v, SymRef):
                return Attr(v.name)
            if isinstance(v, SymLookup):
                return Const(
                    SymLookup(
                        v.attr,
                        v.source,
                        tuple((a, _refs_to_attrs(x)) for a, x in v.conditions),
                    )
                )
        return node

    return map_expr(e, swap)


def translate_chi(
    chi: ChiExpr, translator: Translator
) -> Expr:
    if isinstance(chi, ChiConst):
        return Const(chi.value)
    if isinstance(chi, ChiAnd):
        return And(tuple(translate_chi(i, translator) for i in chi.items))
    if isinstance(chi, ChiOr):
        return Or(tuple(translate_chi(i, translator) for i in chi.items))
    if isinstance(chi, ChiNot):
        return Not(translate_chi(chi.item, translator))
    if isinstance(chi, GammaAtom):
        table = translator.iexpr(chi.body)
        return translator.spec(chi.spec, table.row_dicts(), {})
    raise TranslateError(f"unknown restriction node {chi!r}")


def translate_query(
    q: SolutionSet | RankedQuery,
    catalog: Mapping[str, object],
    cap: int = 10**7,
    name: str | None = None,
) -> FlatForm:
    """Flatten a (possibly ranked) solution-set query."""
    ranked = q if isinstance(q, RankedQuery) else RankedQuery(q)
    u = ranked.source
    names = flat_attr_names(u)
    schema, domain_conjuncts = build_flat(u, names)
    sym = build_sym(u, names)
    translator = Translator(sym, catalog, cap)

    translated = _refs_to_attrs(translate_chi(u.chi, translator))
    parts = tuple(domain_conjuncts) + (
        (translated,) if translated != Const(True) else ()
    )
    if not parts:
        flat_chi: Expr = Const(True)
    elif len(parts) == 1:
        flat_chi = parts[0]
    else:
        flat_chi = And(parts)
    flat = CompleteRelation(name or (u.name and f"flat_{u.name}") or None, schema, flat_chi)

    objective = None
    objective_name = None
    objective_terms = None
    if ranked.objective is not None:
        atom = ranked.objective
        table = translator.iexpr(atom.body)
        objective = _refs_to_attrs(translator.spec(atom.spec, table.row_dicts(), {}))
        objective_name = atom.result
        if isinstance(atom.body, CandidateRef) and isinstance(atom.spec, AggCall):
            fn = agg_fn(atom.spec.fn)
            if fn.name == "sum" and len(atom.spec.args) == 1:
                objective_terms = tuple(
                    _refs_to_attrs(_substitute_row(atom.spec.args[0], row))
                    for row in sym.row_dicts()
                )
    return FlatForm(
        flat=flat,
        base=u.base,
        sym=sym,
        flat_names=names,
        direction=ranked.direction,
        objective=objective,
        objective_name=objective_name,
        objective_terms=objective_terms,
        limit=ranked.limit,
    )
