"""Turn parsed programs into catalog entries and runnable sinks.

Elaboration resolves names across three namespaces (data relations,
characteristic-function relations, solution sets), type-checks operator
placement, and converts restriction bodies into the atom trees the solution
algebra expects.  Inside a restriction or ordering bracket, the operand
solution set's own name denotes the candidate relation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import adr, cdr, solset, surface
from .adr import (
    AttrDomain,
    BoolDom,
    FloatDom,
    FloatRange,
    IntDom,
    IntRange,
    RefDom,
    Relation,
    VarcharDom,
)
from .cdr import CompleteRelation
from .errors import ElaborationError, SolqError
from .expr import (
    AggCall,
    And,
    Attr,
    Between,
    BinOp,
    Cmp,
    Const,
    Expr,
    Func,
    Neg,
    Not,
    Or,
    Rel,
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

_AGG_CANON = {
    "sum": "sum",
    "min": "min",
    "max": "max",
    "count": "count",
    "alldiff": "alldifferent",
    "bool_and": "bool_and",
    "bool_or": "bool_or",
    "hassubset": "hassubset",
}
_FUNC_NAMES = frozenset(["abs", "sqrt", "exp", "sin", "pow"])


@dataclass(frozen=True)
class ProjectedQuery:
    """A solution-set query closed by projection; evaluated at run time."""

    query: SolutionSet | RankedQuery
    rank: str | None
    attrs: tuple[str, ...]
    name: str | None = None

    @property
    def source(self) -> SolutionSet:
        q = self.query
        return q.source if isinstance(q, RankedQuery) else q


@dataclass(frozen=True)
class Sink:
    kind: str  # run | emit
    name: str
    value: object


@dataclass
class Catalog:
    """Named values in three namespaces plus closed queries."""

    adrs: dict[str, Relation] = field(default_factory=dict)
    cdrs: dict[str, CompleteRelation] = field(default_factory=dict)
    solsets: dict[str, object] = field(default_factory=dict)

    def tables(self) -> dict[str, object]:
        """The relation-valued names, as translation and evaluation see them."""
        merged: dict[str, object] = dict(self.adrs)
        merged.update(self.cdrs)
        return merged

    def lookup(self, name: str):
        for ns in (self.adrs, self.cdrs, self.solsets):
            if name in ns:
                return ns[name]
        return None

    def define(self, name: str, value: object, pos) -> None:
        if self.lookup(name) is not None:
            raise _err(f"{name!r} is already defined", pos)
        if isinstance(value, Relation):
            self.adrs[name] = value
        elif isinstance(value, CompleteRelation):
            self.cdrs[name] = value
        elif isinstance(value, (SolutionSet, RankedQuery, ProjectedQuery)):
            self.solsets[name] = value
        else:
            raise _err(f"cannot bind {name!r} to {type(value).__name__}", pos)


@dataclass(frozen=True)
class Pipeline:
    catalog: Catalog
    sinks: tuple[Sink, ...]


def _err(message: str, pos) -> ElaborationError:
    if pos:
        return ElaborationError(f"{pos[0]}:{pos[1]}: {message}")
    return ElaborationError(message)


def elaborate(
    program: surface.Program,
    base_dir: str | Path | None = None,
    catalog: Catalog | None = None,
    cap: int = 10**7,
) -> Pipeline:
    cat = catalog or Catalog()
    base = Path(base_dir) if base_dir else Path(".")
    sinks: list[Sink] = []
    for stmt in program.statements:
        if isinstance(stmt, surface.Load):
            schema = tuple((a, _domain(d, cat)) for a, d in stmt.schema)
            rel = load_table(base / stmt.path, schema, name=stmt.name)
            cat.define(stmt.name, rel, stmt.pos)
        elif isinstance(stmt, surface.Definition):
            try:
                value = _relational(stmt.expr, cat, cap, name=stmt.name)
            except SolqError as exc:
                if isinstance(exc, ElaborationError):
                    raise
                raise _err(str(exc), stmt.pos) from exc
            cat.define(stmt.name, value, stmt.pos)
        elif isinstance(stmt, (surface.Run, surface.Emit)):
            value = cat.lookup(stmt.name)
            if value is None:
                raise _err(f"unknown name {stmt.name!r}", stmt.pos)
            kind = "run" if isinstance(stmt, surface.Run) else "emit"
            if kind == "emit" and not isinstance(
                value, (ProjectedQuery, SolutionSet, RankedQuery)
            ):
                raise _err(f"{stmt.name!r} is not a solution-set query", stmt.pos)
            if kind == "run" and isinstance(value, (SolutionSet, RankedQuery)):
                raise _err(
                    f"{stmt.name!r} is an open solution set; close it with project_sol",
                    stmt.pos,
                )
            sinks.append(Sink(kind, stmt.name, value))
        else:
            raise _err(f"unsupported statement {type(stmt).__name__}", stmt.pos)
    return Pipeline(cat, tuple(sinks))


# --------------------------------------------------------------------------
# domains and data loading


def _domain(d: surface.Node, cat: Catalog) -> AttrDomain:
    if isinstance(d, surface.DPrim):
        return {
            "int": IntDom(),
            "float": FloatDom(),
            "bool": BoolDom(),
            "varchar": VarcharDom(),
        }[d.kind]
    if isinstance(d, surface.DRange):
        if isinstance(d.lo, int) and isinstance(d.hi, int):
            return IntRange(d.lo, d.hi)
        return FloatRange(float(d.lo), float(d.hi))
    if isinstance(d, surface.DSet):
        return RefDom(d.values)
    if isinstance(d, surface.DColRef):
        rel = cat.adrs.get(d.relation)
        if rel is None:
            comp = cat.cdrs.get(d.relation)
            if comp is None:
                raise _err(f"reference domain needs a known relation {d.relation!r}", d.pos)
            if d.attr not in comp.attrs:
                raise _err(f"{d.relation!r} has no attribute {d.attr!r}", d.pos)
            rel = cdr.project_eval(comp, (d.attr,))
        idx = rel.attrs.index(d.attr) if d.attr in rel.attrs else -1
        if idx < 0:
            raise _err(f"{d.relation!r} has no attribute {d.attr!r}", d.pos)
        members = tuple(sorted({t[idx] for t in rel.tuples}, key=adr._cell_key))
        return RefDom(members, source=d.relation, attr=d.attr)
    raise _err(f"unsupported domain {d!r}", getattr(d, "pos", None))


def load_table(
    path: str | Path,
    schema,
    name: str | None = None,
) -> Relation:
    """Read a CSV or JSON file into a relation, typed against `schema`."""
    path = Path(path)
    if not path.exists():
        raise ElaborationError(f"no such file: {path}")
    if path.suffix.lower() == ".json":
        rows = _read_json(path, schema)
    else:
        rows = _read_csv(path, schema)
    try:
        return Relation(name, tuple(schema), tuple(rows))
    except SolqError as exc:
        raise ElaborationError(f"{path}: {exc}") from exc


def _read_csv(path: Path, schema) -> list[tuple]:
    attrs = [a for a, _ in schema]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ElaborationError(f"{path}: missing header row") from None
        if [h.strip() for h in header] != attrs:
            raise ElaborationError(
                f"{path}: header {header} does not match schema attributes {attrs}"
            )
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(schema):
                raise ElaborationError(
                    f"{path}:{lineno}: expected {len(schema)} fields, found {len(raw)}"
                )
            row = []
            for (a, dom), text in zip(schema, raw):
                try:
                    row.append(_parse_cell(text.strip(), dom))
                except ValueError as exc:
                    raise ElaborationError(f"{path}:{lineno}: {a}: {exc}") from None
            for (a, dom), v in zip(schema, row):
                if not dom.contains(dom.coerce(v)):
                    raise ElaborationError(
                        f"{path}:{lineno}: value {v!r} outside domain {dom} of {a!r}"
                    )
            rows.append(tuple(row))
    return rows


def _parse_cell(text: str, dom: AttrDomain):
    if isinstance(dom, (IntDom, IntRange)):
        return int(text)
    if isinstance(dom, (FloatDom, FloatRange)):
        return float(text)
    if isinstance(dom, BoolDom):
        if text == "true":
            return True
        if text == "false":
            return False
        raise ValueError(f"expected true or false, found {text!r}")
    if isinstance(dom, RefDom):
        sample = dom.values()[0] if dom.values() else ""
        if isinstance(sample, bool):
            return _parse_cell(text, BoolDom())
        if isinstance(sample, int):
            return int(text)
        if isinstance(sample, float):
            return float(text)
        return text
    return text


def _read_json(path: Path, schema) -> list[tuple]:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ElaborationError(f"{path}: {exc}") from None
    if not isinstance(doc, list):
        raise ElaborationError(f"{path}: expected an array of objects")
    rows = []
    for i, entry in enumerate(doc, start=1):
        if not isinstance(entry, dict):
            raise ElaborationError(f"{path}: row {i}: expected an object")
        row = []
        for a, dom in schema:
            if a not in entry:
                raise ElaborationError(f"{path}: row {i}: missing attribute {a!r}")
            v = dom.coerce(entry[a])
            if not dom.contains(v):
                raise ElaborationError(
                    f"{path}: row {i}: value {entry[a]!r} outside domain {dom} of {a!r}"
                )
            row.append(v)
        rows.append(tuple(row))
    return rows


# --------------------------------------------------------------------------
# relational elaboration


def _relational(e: surface.Node, cat: Catalog, cap: int, name: str | None = None):
    if isinstance(e, surface.RName):
        value = cat.lookup(e.name)
        if value is None:
            raise _err(f"unknown name {e.name!r}", e.pos)
        return value
    if isinstance(e, surface.ROmega):
        schema = tuple((a, _domain(d, cat)) for a, d in e.schema)
        if e.rows is not None:
            return adr.construct(name, schema, e.rows)
        chi = _scalar(e.chi, _ScalarCtx(frozenset(a for a, _ in schema), cat))
        return cdr.construct(name, schema, chi)
    if isinstance(e, surface.ROmegaSol):
        base_v = _relational(e.base, cat, cap)
        dec_v = _relational(e.decision, cat, cap)
        if not isinstance(base_v, Relation):
            raise _err("omega_sol base must be a data relation", e.pos)
        if isinstance(dec_v, Relation):
            dec_v = cdr.adr_as_cdr(dec_v)
        if not isinstance(dec_v, CompleteRelation):
            raise _err("omega_sol decision must be a relation", e.pos)
        return solset.construct(base_v, dec_v, name=name)
    if isinstance(e, surface.RBinary):
        return _binary(e, cat, cap, name)
    if isinstance(e, surface.RSelect):
        return _selection(e, cat, cap, name)
    if isinstance(e, surface.RProject):
        v = _materialize(_relational(e.arg, cat, cap), cat, cap)
        if isinstance(v, Relation):
            return adr.project(v, e.attrs, name=name)
        if isinstance(v, CompleteRelation):
            return cdr.project_eval(v, e.attrs, cap=cap, name=name)
        raise _err("project over a solution set; use project_sol", e.pos)
    if isinstance(e, surface.RProjectSol):
        v = _relational(e.arg, cat, cap)
        if not isinstance(v, (SolutionSet, RankedQuery)):
            raise _err("project_sol needs a solution set", e.pos)
        src = v.source if isinstance(v, RankedQuery) else v
        attrs = e.attrs if e.attrs is not None else src.candidate_attrs
        if e.rank is not None and e.rank in attrs:
            raise _err(f"rank attribute {e.rank!r} collides with a projected attribute", e.pos)
        return ProjectedQuery(v, e.rank, tuple(attrs), name=name)
    if isinstance(e, surface.RRename):
        v = _relational(e.arg, cat, cap)
        if not e.sol:
            v = _materialize(v, cat, cap)
        mapping = dict(e.pairs)
        if e.sol:
            if not isinstance(v, SolutionSet):
                raise _err("rename_sol needs a solution set", e.pos)
            return solset.rename(v, mapping, name=name)
        if isinstance(v, Relation):
            return adr.rename(v, mapping, name=name)
        if isinstance(v, CompleteRelation):
            return cdr.rename(v, mapping, name=name)
        raise _err("rename over a solution set; use rename_sol", e.pos)
    if isinstance(e, surface.RGamma):
        v = _materialize(_relational(e.arg, cat, cap), cat, cap)
        if not isinstance(v, Relation):
            raise _err("grouping outside a restriction body needs a data relation", e.pos)
        ctx = _ScalarCtx(frozenset(v.attrs), cat, in_gamma=True)
        specs = tuple((_scalar(s, ctx), n) for s, n in e.specs)
        return adr.group_aggregate(v, e.grouping, specs, catalog=cat.tables(), name=name)
    if isinstance(e, surface.RTau):
        v = _relational(e.arg, cat, cap)
        if isinstance(v, ProjectedQuery):
            raise _err("ordering after project_sol; projection closes the query", e.pos)
        if not isinstance(v, (SolutionSet, RankedQuery)):
            raise _err("tau needs a solution set", e.pos)
        src = v.source if isinstance(v, RankedQuery) else v
        atom = _objective_atom(e, src, cat)
        return solset.order_limit(v, e.direction, atom)
    if isinstance(e, surface.RLimit):
        v = _relational(e.arg, cat, cap)
        if isinstance(v, ProjectedQuery):
            raise _err("limit after project_sol; projection closes the query", e.pos)
        if not isinstance(v, (SolutionSet, RankedQuery)):
            raise _err("lambda needs a solution set", e.pos)
        return solset.order_limit(v, limit=e.limit)
    raise _err(f"cannot elaborate {type(e).__name__}", getattr(e, "pos", None))


def _materialize(v, cat: Catalog, cap: int):
    """Closed queries used as plain relations evaluate here, by brute force."""
    if isinstance(v, ProjectedQuery):
        from . import evaluate

        return evaluate.run_projection(
            v.query, v.rank, v.attrs, cat.tables(), cap=cap, name=v.name
        )
    return v


def _binary(e: surface.RBinary, cat: Catalog, cap: int, name: str | None):
    left = _materialize(_relational(e.left, cat, cap), cat, cap)
    right = _materialize(_relational(e.right, cat, cap), cat, cap)
    if e.sol:
        if not isinstance(left, SolutionSet) or not isinstance(right, SolutionSet):
            raise _err(f"{e.op}_sol needs two solution sets", e.pos)
        fn = {
            "join": solset.natural_join,
            "cross": solset.cross,
            "union": solset.union,
            "diff": solset.difference,
            "intersect": solset.intersect,
        }[e.op]
        return fn(left, right, name=name)
    if isinstance(left, (SolutionSet, RankedQuery, ProjectedQuery)) or isinstance(
        right, (SolutionSet, RankedQuery, ProjectedQuery)
    ):
        raise _err(f"{e.op} over solution sets; use {e.op}_sol", e.pos)
    if isinstance(left, Relation) and isinstance(right, Relation):
        fn = {
            "join": adr.natural_join,
            "cross": adr.cross,
            "union": adr.union,
            "diff": adr.difference,
            "intersect": adr.intersect,
        }[e.op]
        return fn(left, right, name=name)
    if isinstance(left, Relation) or isinstance(right, Relation):
        rel, comp = (left, right) if isinstance(left, Relation) else (right, left)
        if e.op == "join":
            return cdr.join_with_adr(rel, comp, name=name, cap=cap)
        left_c = left if isinstance(left, CompleteRelation) else cdr.adr_as_cdr(left)
        right_c = right if isinstance(right, CompleteRelation) else cdr.adr_as_cdr(right)
        left, right = left_c, right_c
    fn = {
        "join": cdr.natural_join,
        "cross": cdr.cross,
        "union": cdr.union,
        "diff": cdr.difference,
        "intersect": cdr.intersect,
    }[e.op]
    return fn(left, right, name=name)


def _selection(e: surface.RSelect, cat: Catalog, cap: int, name: str | None):
    v = _relational(e.arg, cat, cap)
    if not e.sol:
        v = _materialize(v, cat, cap)
    if e.sol:
        if isinstance(v, RankedQuery):
            raise _err("selection after ordering; apply select_sol first", e.pos)
        if not isinstance(v, SolutionSet):
            raise _err("select_sol needs a solution set", e.pos)
        cand = _candidate_name(e.arg, v)
        chi = _chi(e.predicate, _BodyCtx(cand, v, cat))
        return solset.select(v, chi, name=name)
    if isinstance(v, Relation):
        return adr.select(v, _scalar(e.predicate, _ScalarCtx(frozenset(v.attrs), cat)), name=name)
    if isinstance(v, CompleteRelation):
        return cdr.select(v, _scalar(e.predicate, _ScalarCtx(frozenset(v.attrs), cat)), name=name)
    raise _err("select over a solution set; use select_sol", e.pos)


def _candidate_name(arg: surface.Node, v: SolutionSet | RankedQuery) -> str | None:
    if isinstance(arg, surface.RName):
        return arg.name
    src = v.source if isinstance(v, RankedQuery) else v
    return src.name


def _objective_atom(e: surface.RTau, src: SolutionSet, cat: Catalog) -> GammaAtom:
    cand = _candidate_name(e.arg, src)
    spec, body = _atom_parts(e.spec, _BodyCtx(cand, src, cat), e.pos)
    return GammaAtom(spec, body, e.result)


# --------------------------------------------------------------------------
# scalar expressions

_CHAIN_FNS = ("sum", "min", "max", "count", "alldifferent", "bool_and", "bool_or", "hassubset")


@dataclass(frozen=True)
class _ScalarCtx:
    """Plain row-level expression: names are attributes, no table-valued calls."""

    attrs: frozenset[str]
    cat: Catalog
    in_gamma: bool = False


def _scalar(e: surface.Node, ctx: _ScalarCtx) -> Expr:
    if isinstance(e, surface.SConst):
        return Const(e.value)
    if isinstance(e, surface.SName):
        if e.name not in ctx.attrs:
            raise _err(f"unknown attribute {e.name!r}", e.pos)
        return Attr(e.name)
    if isinstance(e, surface.SUn):
        if e.op == "neg":
            return Neg(_scalar(e.operand, ctx))
        return Not(_scalar(e.operand, ctx))
    if isinstance(e, surface.SBin):
        if e.op == "and":
            return And((_scalar(e.left, ctx), _scalar(e.right, ctx)))
        if e.op == "or":
            return Or((_scalar(e.left, ctx), _scalar(e.right, ctx)))
        return BinOp(e.op, _scalar(e.left, ctx), _scalar(e.right, ctx))
    if isinstance(e, surface.SCmp):
        return Cmp(e.op, _scalar(e.left, ctx), _scalar(e.right, ctx))
    if isinstance(e, surface.SBetween):
        return Between(_scalar(e.value, ctx), _scalar(e.low, ctx), _scalar(e.high, ctx))
    if isinstance(e, surface.SCall):
        if e.name in _FUNC_NAMES:
            if e.body is not None:
                raise _err(f"{e.name} takes no table argument", e.pos)
            return Func(e.name, tuple(_scalar(a, ctx) for a in e.args))
        agg = _AGG_CANON.get(e.name)
        if agg is None:
            raise _err(f"unknown function {e.name!r}", e.pos)
        if not ctx.in_gamma:
            raise _err(f"aggregate {e.name!r} needs a table; write {e.name}(... : T)", e.pos)
        if e.body is not None:
            raise _err("aggregates inside a grouping spec fold over the group", e.pos)
        if agg == "hassubset":
            return AggCall(agg, tuple(_rel_arg(a, ctx.cat) for a in e.args))
        return AggCall(agg, tuple(_scalar(a, ctx) for a in e.args))
    raise _err(f"cannot elaborate {type(e).__name__}", getattr(e, "pos", None))


def _rel_arg(a: surface.Node, cat: Catalog) -> Expr:
    if isinstance(a, surface.SName) and a.name in cat.adrs:
        return Rel(a.name)
    raise _err("hassubset needs a data relation by name", getattr(a, "pos", None))


# --------------------------------------------------------------------------
# restriction bodies


@dataclass(frozen=True)
class _BodyCtx:
    candidate: str | None
    solset: SolutionSet
    cat: Catalog


def _chi(e: surface.Node, ctx: _BodyCtx) -> ChiExpr:
    if isinstance(e, surface.SBin) and e.op == "and":
        return ChiAnd((_chi(e.left, ctx), _chi(e.right, ctx)))
    if isinstance(e, surface.SBin) and e.op == "or":
        return ChiOr((_chi(e.left, ctx), _chi(e.right, ctx)))
    if isinstance(e, surface.SUn) and e.op == "not":
        return ChiNot(_chi(e.operand, ctx))
    if isinstance(e, surface.SConst) and isinstance(e.value, bool):
        return ChiConst(e.value)
    spec, body = _atom_parts(e, ctx, getattr(e, "pos", None))
    return GammaAtom(spec, body)


def _atom_parts(e: surface.Node, ctx: _BodyCtx, pos) -> tuple[Expr, IExpr]:
    """Split one restriction into its aggregate spec and shared table body."""
    bodies: list[tuple[surface.Node, IExpr]] = []

    def convert(n: surface.Node) -> Expr:
        if isinstance(n, surface.SCall):
            if n.body is None:
                if n.name in _FUNC_NAMES:
                    return Func(n.name, tuple(convert(a) for a in n.args))
                if n.name in _AGG_CANON:
                    raise _err(
                        f"aggregate {n.name!r} needs a table; write {n.name}(... : T)",
                        n.pos,
                    )
                raise _err(f"unknown function {n.name!r}", n.pos)
            agg = _AGG_CANON.get(n.name)
            if agg is None:
                raise _err(f"unknown aggregate {n.name!r}", n.pos)
            body = _iexpr(n.body, ctx)
            if bodies and bodies[0][1] != body:
                raise _err("one restriction aggregates over one table", n.pos)
            bodies.append((n, body))
            cols = _body_attrs(body, ctx)
            inner = _ScalarCtx(cols, ctx.cat, in_gamma=True)
            if agg == "hassubset":
                return AggCall(agg, tuple(_rel_arg(a, ctx.cat) for a in n.args))
            return AggCall(agg, tuple(_scalar(a, inner) for a in n.args))
        if isinstance(n, surface.SConst):
            return Const(n.value)
        if isinstance(n, surface.SName):
            raise _err(
                f"{n.name!r} is not usable here; restrictions see only aggregated values",
                n.pos,
            )
        if isinstance(n, surface.SUn):
            return Neg(convert(n.operand)) if n.op == "neg" else Not(convert(n.operand))
        if isinstance(n, surface.SBin):
            if n.op == "and":
                return And((convert(n.left), convert(n.right)))
            if n.op == "or":
                return Or((convert(n.left), convert(n.right)))
            return BinOp(n.op, convert(n.left), convert(n.right))
        if isinstance(n, surface.SCmp):
            return Cmp(n.op, convert(n.left), convert(n.right))
        if isinstance(n, surface.SBetween):
            return Between(convert(n.value), convert(n.low), convert(n.high))
        raise _err(f"cannot elaborate {type(n).__name__}", getattr(n, "pos", None))

    spec = convert(e)
    if not bodies:
        raise _err("restriction must aggregate over a table", pos)
    return spec, bodies[0][1]


def _iexpr(e: surface.Node, ctx: _BodyCtx) -> IExpr:
    if isinstance(e, surface.RName):
        if e.name == ctx.candidate:
            return CandidateRef()
        raise _err(
            f"{e.name!r} does not denote the candidate; join catalog relations "
            "onto it instead",
            e.pos,
        )
    if isinstance(e, surface.RBinary) and e.op == "join" and not e.sol:
        sides = (e.left, e.right)
        plain = [s for s in sides if _names_table(s, ctx)]
        rooted = [s for s in sides if not _names_table(s, ctx)]
        if len(plain) == 1 and len(rooted) == 1:
            return JoinRel(_iexpr(rooted[0], ctx), plain[0].name)
        raise _err("join inside a restriction pairs the candidate with a named table", e.pos)
    if isinstance(e, surface.RSelect) and not e.sol:
        child = _iexpr(e.arg, ctx)
        cols = _body_attrs(child, ctx)
        return Select(child, _scalar(e.predicate, _ScalarCtx(cols, ctx.cat)))
    if isinstance(e, surface.RProject):
        return Project(_iexpr(e.arg, ctx), e.attrs)
    if isinstance(e, surface.RRename) and not e.sol:
        return RenameI(_iexpr(e.arg, ctx), e.pairs)
    if isinstance(e, surface.RGamma):
        child = _iexpr(e.arg, ctx)
        cols = _body_attrs(child, ctx)
        inner = _ScalarCtx(cols, ctx.cat, in_gamma=True)
        specs = tuple((_scalar(s, inner), n) for s, n in e.specs)
        return GroupAgg(child, e.grouping, specs)
    raise _err(
        f"{type(e).__name__} cannot appear inside a restriction body",
        getattr(e, "pos", None),
    )


def _names_table(e: surface.Node, ctx: _BodyCtx) -> bool:
    return (
        isinstance(e, surface.RName)
        and e.name != ctx.candidate
        and (e.name in ctx.cat.adrs or e.name in ctx.cat.cdrs)
    )


def _body_attrs(body: IExpr, ctx: _BodyCtx) -> frozenset[str]:
    """Column set a body exposes; what the spec may reference."""
    if isinstance(body, CandidateRef):
        return frozenset(ctx.solset.candidate_attrs)
    if isinstance(body, JoinRel):
        rel = ctx.cat.lookup(body.relation)
        return _body_attrs(body.child, ctx) | frozenset(rel.attrs)
    if isinstance(body, Select):
        return _body_attrs(body.child, ctx)
    if isinstance(body, Project):
        return frozenset(body.attrs)
    if isinstance(body, RenameI):
        mapping = dict(body.mapping)
        return frozenset(mapping.get(a, a) for a in _body_attrs(body.child, ctx))
    if isinstance(body, GroupAgg):
        return frozenset(body.grouping) | frozenset(n for _, n in body.specs)
    raise ElaborationError(f"unknown body node {body!r}")
