"""Solution sets: candidate spaces built by exponentiation, with restrictions.

A solution set pairs a finite base relation with a decision relation; its
candidates are all ways of extending every base tuple with one decision
tuple (total-function semantics, |ext(Decision)|^|Base| candidates).  The
restriction is a boolean tree whose atoms aggregate a candidate expression
down to a scalar.  Operators combine restrictions syntactically; joining two
solution sets lifts each side's atoms by grouping over the partner's base
attributes so they keep their per-candidate meaning inside the joined space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import adr, cdr
from .adr import Relation, Schema
from .cdr import CompleteRelation
from .errors import CapExceededError, EvalError, SchemaError
from .expr import (
    AggCall,
    And,
    Attr,
    Const,
    Expr,
    Scalar,
    agg_fn,
    eval_group_expr,
    free_attrs,
    is_boolean_shaped,
    map_expr,
    substitute_attrs,
    walk,
)

# --------------------------------------------------------------------------
# candidate expressions (the relational body an atom aggregates over)


class IExpr:
    """Base class for candidate-expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class CandidateRef(IExpr):
    """The candidate relation itself."""


@dataclass(frozen=True)
class JoinRel(IExpr):
    """Natural join of the running expression with a catalog relation."""

    child: IExpr
    relation: str


@dataclass(frozen=True)
class Select(IExpr):
    child: IExpr
    predicate: Expr


@dataclass(frozen=True)
class Project(IExpr):
    child: IExpr
    attrs: tuple[str, ...]


@dataclass(frozen=True)
class RenameI(IExpr):
    child: IExpr
    mapping: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class GroupAgg(IExpr):
    child: IExpr
    grouping: tuple[str, ...]
    specs: tuple[tuple[Expr, str], ...]


# --------------------------------------------------------------------------
# restriction trees


class ChiExpr:
    __slots__ = ()


@dataclass(frozen=True)
class ChiConst(ChiExpr):
    value: bool


@dataclass(frozen=True)
class ChiAnd(ChiExpr):
    items: tuple[ChiExpr, ...]


@dataclass(frozen=True)
class ChiOr(ChiExpr):
    items: tuple[ChiExpr, ...]


@dataclass(frozen=True)
class ChiNot(ChiExpr):
    item: ChiExpr


@dataclass(frozen=True)
class GammaAtom(ChiExpr):
    """One restriction: aggregate `spec` over the rows of `body`.

    The spec is an expression over the body's columns whose aggregate calls
    fold over all rows (empty grouping), e.g. Bool_And(ret) or
    sum(kCal) BETWEEN 2.0 AND 2.5.  It must be boolean-valued.
    """

    spec: Expr
    body: IExpr
    result: str | None = None

    def __post_init__(self) -> None:
        if not any(isinstance(e, AggCall) for e in walk(self.spec)):
            raise SchemaError("restriction spec must contain an aggregate")


TRUE_CHI = ChiConst(True)


def map_atoms(chi: ChiExpr, f) -> ChiExpr:
    if isinstance(chi, GammaAtom):
        return f(chi)
    if isinstance(chi, ChiAnd):
        return ChiAnd(tuple(map_atoms(i, f) for i in chi.items))
    if isinstance(chi, ChiOr):
        return ChiOr(tuple(map_atoms(i, f) for i in chi.items))
    if isinstance(chi, ChiNot):
        return ChiNot(map_atoms(chi.item, f))
    return chi


def chi_atoms(chi: ChiExpr) -> list[GammaAtom]:
    if isinstance(chi, GammaAtom):
        return [chi]
    if isinstance(chi, (ChiAnd, ChiOr)):
        out: list[GammaAtom] = []
        for i in chi.items:
            out.extend(chi_atoms(i))
        return out
    if isinstance(chi, ChiNot):
        return chi_atoms(chi.item)
    return []


# --------------------------------------------------------------------------
# solution sets


@dataclass(frozen=True)
class SolutionSet:
    name: str | None
    base: Relation
    decision: CompleteRelation
    chi: ChiExpr = TRUE_CHI

    def __post_init__(self) -> None:
        overlap = set(self.base.attrs) & set(self.decision.attrs)
        if overlap:
            raise SchemaError(f"base and decision share attributes {sorted(overlap)}")

    @property
    def candidate_schema(self) -> Schema:
        return self.base.schema + self.decision.schema

    @property
    def candidate_attrs(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.candidate_schema)


@dataclass(frozen=True)
class RankedQuery:
    """A solution set with outer ordering/limiting applied."""

    source: SolutionSet
    direction: str | None = None  # ASC | DESC
    objective: GammaAtom | None = None  # orderable-valued atom
    limit: int | None = None


def construct(
    base: Relation | None = None,
    decision: CompleteRelation | None = None,
    name: str | None = None,
) -> SolutionSet:
    """Solution-set constructor; both components default to the nullary unit.

    The unit base is the single empty tuple, the unit decision the nullary
    complete relation holding it, so the default solution set has exactly one
    candidate and no restriction.
    """
    if base is None:
        base = Relation(None, (), ((),))
    if decision is None:
        decision = CompleteRelation(None, (), Const(True))
    return SolutionSet(name, base, decision, TRUE_CHI)


def select(u: SolutionSet, restriction: ChiExpr, name: str | None = None) -> SolutionSet:
    _check_chi(restriction, u)
    chi = restriction if u.chi == TRUE_CHI else ChiAnd((u.chi, restriction))
    return SolutionSet(name, u.base, u.decision, chi)


def _check_chi(chi: ChiExpr, u: SolutionSet) -> None:
    for atom in chi_atoms(chi):
        if not is_boolean_shaped(atom.spec):
            raise SchemaError(f"restriction spec must be boolean-valued: {atom.spec!r}")
        _check_iexpr_selects(atom.body, u)


def _check_iexpr_selects(body: IExpr, u: SolutionSet) -> None:
    # selections directly over the candidate may only touch base attributes
    if isinstance(body, Select) and isinstance(body.child, CandidateRef):
        bad = free_attrs(body.predicate) & set(u.decision.attrs)
        if bad:
            raise SchemaError(
                f"selection inside a candidate expression touches decision "
                f"attributes {sorted(bad)}"
            )
    for child in _iexpr_children(body):
        _check_iexpr_selects(child, u)


def _iexpr_children(e: IExpr) -> tuple[IExpr, ...]:
    if isinstance(e, (JoinRel, Select, Project, RenameI, GroupAgg)):
        return (e.child,)
    return ()


def lift_atom(atom: GammaAtom, partner_base: tuple[str, ...]) -> GammaAtom:
    """Re-scope an atom into a joined candidate space.

    The body is grouped by the partner's base attributes, the original spec
    becomes a per-group aggregate, and the results are re-folded with
    Bool_And so the atom constrains every slice of the joined candidate.
    """
    if not partner_base:
        return atom
    inner_name = atom.result or "ret"
    grouped = GroupAgg(atom.body, tuple(partner_base), ((atom.spec, inner_name),))
    return GammaAtom(AggCall("bool_and", (Attr(inner_name),)), grouped, atom.result)


def _lift_chi(chi: ChiExpr, partner_base: tuple[str, ...]) -> ChiExpr:
    return map_atoms(chi, lambda a: lift_atom(a, partner_base))


def natural_join(u: SolutionSet, v: SolutionSet, name: str | None = None) -> SolutionSet:
    base = adr.natural_join(u.base, v.base)
    decision = cdr.natural_join(u.decision, v.decision)
    chi_u = _lift_chi(u.chi, v.base.attrs)
    chi_v = _lift_chi(v.chi, u.base.attrs)
    parts = tuple(c for c in (chi_u, chi_v) if c != TRUE_CHI)
    chi: ChiExpr = ChiAnd(parts) if len(parts) > 1 else (parts[0] if parts else TRUE_CHI)
    return SolutionSet(name, base, decision, chi)


def cross(u: SolutionSet, v: SolutionSet, name: str | None = None) -> SolutionSet:
    if set(u.candidate_attrs) & set(v.candidate_attrs):
        raise SchemaError("solution-set cross product requires disjoint candidate schemas")
    return natural_join(u, v, name)


def _require_aligned(u: SolutionSet, v: SolutionSet, op: str) -> None:
    if u.base.schema != v.base.schema or u.base.tuples != v.base.tuples:
        raise SchemaError(f"{op} needs identical bases")
    if set(u.decision.attrs) != set(v.decision.attrs):
        raise SchemaError(f"{op} needs the same decision attributes")
    for a in u.decision.attrs:
        if u.decision.domain_of(a) != v.decision.domain_of(a):
            raise SchemaError(f"{op}: decision attribute {a!r} has mismatched domains")


def intersect(u: SolutionSet, v: SolutionSet, name: str | None = None) -> SolutionSet:
    _require_aligned(u, v, "intersect")
    decision = cdr.natural_join(u.decision, v.decision)
    return SolutionSet(name, u.base, decision, ChiAnd((u.chi, v.chi)))


def difference(u: SolutionSet, v: SolutionSet, name: str | None = None) -> SolutionSet:
    _require_aligned(u, v, "difference")
    decision = cdr.natural_join(u.decision, v.decision)
    return SolutionSet(name, u.base, decision, ChiAnd((u.chi, ChiNot(v.chi))))


def union(u: SolutionSet, v: SolutionSet, name: str | None = None) -> SolutionSet:
    _require_aligned(u, v, "union")
    return SolutionSet(name, u.base, u.decision, ChiOr((u.chi, v.chi)))


def rename(u: SolutionSet, mapping: Mapping[str, str], name: str | None = None) -> SolutionSet:
    base = adr.rename(u.base, {k: v for k, v in mapping.items() if k in u.base.attrs})
    decision = cdr.rename(
        u.decision, {k: v for k, v in mapping.items() if k in u.decision.attrs}
    )
    chi = map_atoms(u.chi, lambda a: _rename_atom(a, dict(mapping)))
    return SolutionSet(name, base, decision, chi)


def _rename_atom(atom: GammaAtom, mapping: dict[str, str]) -> GammaAtom:
    return GammaAtom(
        substitute_attrs(atom.spec, mapping), _rename_iexpr(atom.body, mapping), atom.result
    )


def _rename_iexpr(e: IExpr, mapping: dict[str, str]) -> IExpr:
    if isinstance(e, CandidateRef):
        return e
    if isinstance(e, JoinRel):
        return JoinRel(_rename_iexpr(e.child, mapping), e.relation)
    if isinstance(e, Select):
        return Select(_rename_iexpr(e.child, mapping), substitute_attrs(e.predicate, mapping))
    if isinstance(e, Project):
        return Project(_rename_iexpr(e.child, mapping), tuple(mapping.get(a, a) for a in e.attrs))
    if isinstance(e, RenameI):
        return RenameI(_rename_iexpr(e.child, mapping), e.mapping)
    if isinstance(e, GroupAgg):
        return GroupAgg(
            _rename_iexpr(e.child, mapping),
            tuple(mapping.get(a, a) for a in e.grouping),
            tuple((substitute_attrs(s, mapping), n) for s, n in e.specs),
        )
    raise SchemaError(f"unknown candidate expression node {e!r}")


def order_limit(
    q: SolutionSet | RankedQuery,
    direction: str | None = None,
    objective: GammaAtom | None = None,
    limit: int | None = None,
) -> RankedQuery:
    """Attach an objective (direction + orderable atom) or a candidate limit."""
    ranked = q if isinstance(q, RankedQuery) else RankedQuery(q)
    if objective is not None:
        if ranked.objective is not None:
            raise SchemaError("query already has an objective")
        if ranked.limit is not None:
            raise SchemaError("ordering after a limit is not supported")
        if direction not in ("ASC", "DESC"):
            raise SchemaError(f"order direction must be ASC or DESC, got {direction!r}")
        root = objective.spec
        if isinstance(root, AggCall) and agg_fn(root.fn).kind != "orderable":
            raise SchemaError("objective must use an orderable aggregate")
        ranked = RankedQuery(ranked.source, direction, objective, ranked.limit)
    if limit is not None:
        if ranked.limit is not None:
            raise SchemaError("query already has a limit")
        if limit < 1:
            raise SchemaError("limit must be at least 1")
        ranked = RankedQuery(ranked.source, ranked.direction, ranked.objective, limit)
    return ranked


# --------------------------------------------------------------------------
# direct interpretation (independent of the flattening translation)


def decision_extension(u: SolutionSet, cap: int = 10**7) -> tuple[tuple[Scalar, ...], ...]:
    """Materialize the decision relation's extension (pinning may finish an
    infinite domain; otherwise this raises NotComputableError)."""
    if not u.decision.attrs:
        return ((),)
    return cdr.project_eval(u.decision, u.decision.attrs, cap=cap).tuples


def candidate_count(u: SolutionSet, cap: int = 10**7) -> int:
    return len(decision_extension(u, cap)) ** len(u.base)


def enumerate_candidates(u: SolutionSet, cap: int = 10**7) -> list[Relation]:
    """Materialize dom(U): every total assignment of decisions to base tuples.

    Candidates come out sorted by their flattened value vector (decision
    attribute major, base tuple minor) to match the evaluation order used by
    the translated route.
    """
    ext = decision_extension(u, cap)
    n = len(u.base)
    total = len(ext) ** n
    if total > cap:
        raise CapExceededError(f"candidate space has {total} members, cap is {cap}")
    schema = u.candidate_schema
    dec_attrs = u.decision.attrs
    keyed = []
    for choice in itertools.product(ext, repeat=n):
        rows = tuple(bt + dt for bt, dt in zip(u.base.tuples, choice))
        key = tuple(
            choice[i][j] for j, _ in enumerate(dec_attrs) for i in range(n)
        )
        keyed.append((_flat_key(key), Relation(None, schema, rows)))
    keyed.sort(key=lambda kv: kv[0])
    return [rel for _, rel in keyed]


def _flat_key(values: tuple[Scalar, ...]) -> tuple:
    return tuple(adr._cell_key(v) for v in values)


def eval_iexpr(
    body: IExpr, candidate: Relation, catalog: Mapping[str, object]
) -> Relation:
    """Evaluate a candidate expression against an actual candidate relation."""
    if isinstance(body, CandidateRef):
        return candidate
    if isinstance(body, JoinRel):
        child = eval_iexpr(body.child, candidate, catalog)
        other = catalog.get(body.relation)
        if other is None:
            raise EvalError(f"unknown relation {body.relation!r} in candidate expression")
        if isinstance(other, Relation):
            return adr.natural_join(child, other)
        if isinstance(other, CompleteRelation):
            return cdr.join_with_adr(child, other)
        raise EvalError(f"{body.relation!r} is not joinable inside a candidate expression")
    if isinstance(body, Select):
        return adr.select(eval_iexpr(body.child, candidate, catalog), body.predicate)
    if isinstance(body, Project):
        return adr.project(eval_iexpr(body.child, candidate, catalog), body.attrs)
    if isinstance(body, RenameI):
        return adr.rename(eval_iexpr(body.child, candidate, catalog), dict(body.mapping))
    if isinstance(body, GroupAgg):
        return adr.group_aggregate(
            eval_iexpr(body.child, candidate, catalog),
            body.grouping,
            body.specs,
            catalog=catalog,  # type: ignore[arg-type]
        )
    raise EvalError(f"unknown candidate expression node {body!r}")


def eval_atom(
    atom: GammaAtom, candidate: Relation, catalog: Mapping[str, object]
) -> Scalar:
    rel = eval_iexpr(atom.body, candidate, catalog)
    return eval_group_expr(atom.spec, rel.rows(), {}, catalog)


def interpret_chi(
    chi: ChiExpr, candidate: Relation, catalog: Mapping[str, object]
) -> bool:
    """Interpret a restriction relationally over one candidate."""
    if isinstance(chi, ChiConst):
        return chi.value
    if isinstance(chi, ChiAnd):
        return all(interpret_chi(i, candidate, catalog) for i in chi.items)
    if isinstance(chi, ChiOr):
        return any(interpret_chi(i, candidate, catalog) for i in chi.items)
    if isinstance(chi, ChiNot):
        return not interpret_chi(chi.item, candidate, catalog)
    if isinstance(chi, GammaAtom):
        v = eval_atom(chi, candidate, catalog)
        if not isinstance(v, bool):
            raise EvalError(f"restriction atom produced {v!r}, wanted a boolean")
        return v
    raise EvalError(f"unknown restriction node {chi!r}")


def solutions(
    u: SolutionSet, catalog: Mapping[str, object], cap: int = 10**7
) -> list[Relation]:
    """All candidates satisfying the restriction, in canonical order."""
    return [
        cand
        for cand in enumerate_candidates(u, cap)
        if interpret_chi(u.chi, cand, catalog)
    ]


def rank_solutions(
    q: RankedQuery, catalog: Mapping[str, object], cap: int = 10**7
) -> list[tuple[Relation, Scalar | None]]:
    """Feasible candidates of a ranked query with objective values applied."""
    feasible = solutions(q.source, catalog, cap)
    if q.objective is None:
        ranked = [(c, None) for c in feasible]
    else:
        scored = []
        for c in feasible:
            v = eval_atom(q.objective, c, catalog)
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise EvalError(f"objective produced {v!r}, wanted a number")
            scored.append((c, v))
        reverse = q.direction == "DESC"
        scored.sort(key=lambda cv: cv[1], reverse=reverse)  # stable: ties keep order
        ranked = scored
    if q.limit is not None:
        ranked = ranked[: q.limit]
    return ranked


def project_solutions(
    q: SolutionSet | RankedQuery,
    rank_attr: str | None,
    attrs: Sequence[str],
    catalog: Mapping[str, object],
    cap: int = 10**7,
    backend: str = "brute",
    name: str | None = None,
    solver_path: str | None = None,
    jobs: int = 1,
) -> Relation:
    """Project solutions into one relation via the flattening translation.

    This is the evaluation trigger: the query is flattened, solved by the
    selected backend, and each solution is re-instantiated as a candidate
    relation before projection.  With a rank attribute, candidates are tagged
    1..k in result order so rows of distinct candidates stay apart.
    """
    from . import evaluate  # local import: evaluation sits above this layer

    return evaluate.run_projection(
        q,
        rank_attr,
        attrs,
        catalog,
        cap=cap,
        backend=backend,
        name=name,
        solver_path=solver_path,
        jobs=jobs,
    )
