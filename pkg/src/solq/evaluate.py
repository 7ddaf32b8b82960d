"""Brute-force evaluation of flattened queries.

The flat relation's attributes must be finite, pinned by equality
propagation, or described by an explicit union of assignments; continuous
attributes are never enumerated here and belong to the solver backends.
Assignments are generated in schema order over each domain's value order,
so first-found answers are reproducible across runs and worker counts.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import cdr, translate
from .adr import IntDom, Relation, _cell_key, _infer_domain, _row_key
from .cdr import CompleteRelation, propagate_equalities
from .dnf import _as_equality, is_adr_dnf
from .errors import CapExceededError, EvalError, NotComputableError, SchemaError
from .expr import (
    And,
    Const,
    Expr,
    Or,
    Scalar,
    SymLookup,
    SymRef,
    eval_scalar,
    map_expr,
    walk,
)
from .translate import Cell, FlatForm

SATISFIED = "SATISFIED"
UNSATISFIABLE = "UNSATISFIABLE"
OPTIMAL = "OPTIMAL"
LIMIT_REACHED = "LIMIT_REACHED"

STATUSES = (SATISFIED, UNSATISFIABLE, OPTIMAL, LIMIT_REACHED)


# --------------------------------------------------------------------------
# query classification


@dataclass(frozen=True)
class QueryClass:
    """Evaluation strategy derived from the outer operators.

    One of decision (stop at the first candidate), satisfaction_all (list
    everything), satisfaction_limited (list up to `limit`), or optimization
    (rank by `objective` along `direction`, keep the top `limit` or all).
    """

    kind: str
    limit: int | None = None
    direction: str | None = None
    objective: Expr | None = None

    def __post_init__(self) -> None:
        if self.kind not in (
            "decision",
            "satisfaction_all",
            "satisfaction_limited",
            "optimization",
        ):
            raise EvalError(f"unknown query class {self.kind!r}")
        if self.kind == "optimization" and (
            self.objective is None or self.direction not in ("ASC", "DESC")
        ):
            raise EvalError("optimization needs an objective and a direction")


def classify_query(ff: FlatForm) -> QueryClass:
    """Pick the strategy for a flattened query.

    An ordering without a limit is only meaningful when the whole candidate
    space can be listed, so infinite domains reject it.
    """
    if ff.limit is not None and ff.limit < 1:
        raise EvalError("limit must be at least 1")
    if ff.direction is not None:
        if ff.objective is None:
            raise EvalError("ordering direction set but no objective present")
        if ff.limit is None and not all(d.is_finite for _, d in ff.flat.schema):
            raise NotComputableError(
                "ordered enumeration without a limit needs finite domains"
            )
        return QueryClass("optimization", ff.limit, ff.direction, ff.objective)
    if ff.limit == 1:
        return QueryClass("decision", 1)
    if ff.limit is not None:
        return QueryClass("satisfaction_limited", ff.limit)
    return QueryClass("satisfaction_all")


# --------------------------------------------------------------------------
# outcomes


@dataclass(frozen=True)
class EvalOutcome:
    """Solver verdict: candidate assignments in answer order plus a status.

    Candidates map flat attribute names to values.  The candidate tuple is
    empty exactly when the status is UNSATISFIABLE.  checked counts the
    assignments tested, which exposes early exits to instrumentation.
    """

    status: str
    candidates: tuple[dict[str, Scalar], ...]
    objective_values: tuple[Scalar, ...] | None = None
    checked: int = 0

    def __post_init__(self) -> None:
        if self.status not in STATUSES:
            raise EvalError(f"unknown status {self.status!r}")
        if (len(self.candidates) == 0) != (self.status == UNSATISFIABLE):
            raise EvalError(
                f"status {self.status} with {len(self.candidates)} candidates"
            )


# --------------------------------------------------------------------------
# enumeration


def _holds(chi: Expr, binding: Mapping[str, Scalar]) -> bool:
    v = eval_scalar(chi, binding)
    if not isinstance(v, bool):
        raise EvalError(f"characteristic function returned {v!r}, wanted a boolean")
    return v


def _dnf_assignments(c: CompleteRelation) -> list[dict[str, Scalar]]:
    # the formula is a union of full assignments; read them off directly,
    # dropping any that fall outside the declared domains
    chi = c.chi
    if chi == Const(False):
        return []
    attrs = c.attrs
    out: dict[tuple, dict[str, Scalar]] = {}
    for disjunct in chi.items if isinstance(chi, Or) else (chi,):
        atoms = disjunct.items if isinstance(disjunct, And) else (disjunct,)
        row: dict[str, Scalar] = {}
        ok = True
        for atom in atoms:
            bound = _as_equality(atom)
            assert bound is not None  # is_adr_dnf vetted the shape
            a, v = bound
            dom = c.domain_of(a)
            v = dom.coerce(v)
            if not dom.contains(v):
                ok = False
                break
            row[a] = v
        if ok:
            out.setdefault(_row_key(tuple(row[a] for a in attrs)), row)
    return [out[k] for k in sorted(out)]


def enumerate_assignments(
    c: CompleteRelation, cap: int = 10**7
) -> list[dict[str, Scalar]]:
    """All satisfying assignments of a complete relation, canonically sorted.

    Attributes not pinned by equality propagation must have finite domains,
    unless the characteristic function is already a union of assignments
    (the shape explicit tuple sets produce), which enumerates directly and
    covers unbounded domains too.
    """
    attrs = c.attrs
    if is_adr_dnf(c.chi, attrs):
        return _dnf_assignments(c)
    bound = propagate_equalities(c.chi, {}, c.schema)
    free = [a for a in attrs if a not in bound]
    infinite = [a for a in free if not c.domain_of(a).is_finite]
    if infinite:
        raise NotComputableError(
            f"attributes {infinite} range over infinite domains and are not "
            "pinned by equalities; use a solver backend"
        )
    total = math.prod(len(c.domain_of(a).values()) for a in free)
    if total > cap:
        raise CapExceededError(f"{total} assignments exceed the cap ({cap})")
    out = []
    for combo in itertools.product(*(c.domain_of(a).values() for a in free)):
        full = dict(bound)
        full.update(zip(free, combo))
        if _holds(c.chi, full):
            out.append(full)
    out.sort(key=lambda r: _row_key(tuple(r[a] for a in attrs)))
    return out


# --------------------------------------------------------------------------
# lookup lowering

LookupTables = dict[tuple[str, str, tuple[str, ...]], dict[tuple, Scalar]]


def _table_key(lk: SymLookup) -> tuple[str, str, tuple[str, ...]]:
    return (lk.source, lk.attr, tuple(a for a, _ in lk.conditions))


def _lookup_tables(
    exprs: Sequence[Expr],
    catalog: Mapping[str, object] | None,
    cap: int,
) -> LookupTables:
    """Materialize every lookup's source column as a key-indexed map."""
    tables: LookupTables = {}
    for e in exprs:
        for node in walk(e):
            if not (isinstance(node, Const) and isinstance(node.value, SymLookup)):
                continue
            lk = node.value
            tkey = _table_key(lk)
            if tkey in tables:
                continue
            raw = (catalog or {}).get(lk.source)
            if raw is None:
                raise EvalError(f"lookup source {lk.source!r} is not in the catalog")
            if isinstance(raw, CompleteRelation):
                raw = cdr.project_eval(raw, raw.attrs, cap=cap, name=lk.source)
            mapping: dict[tuple, Scalar] = {}
            for row in raw.rows():
                key = tuple(row[a] for a in tkey[2])
                if key in mapping and mapping[key] != row[lk.attr]:
                    raise EvalError(
                        "functional dependency violated by data: key "
                        f"{dict(zip(tkey[2], key))} matches multiple rows "
                        f"of {lk.source!r}"
                    )
                mapping[key] = row[lk.attr]
            tables[tkey] = mapping
    return tables


def _ground_lookups(
    e: Expr, binding: Mapping[str, Scalar], tables: LookupTables
) -> Expr:
    def swap(node: Expr) -> Expr:
        if isinstance(node, Const) and isinstance(node.value, SymLookup):
            lk = node.value
            tkey = _table_key(lk)
            key = tuple(eval_scalar(x, binding) for _, x in lk.conditions)
            try:
                return Const(tables[tkey][key])
            except KeyError:
                raise EvalError(
                    "functional dependency violated by data: key "
                    f"{dict(zip(tkey[2], key))} matches 0 rows of {lk.source!r}"
                ) from None
        return node

    return map_expr(e, swap)


# --------------------------------------------------------------------------
# the scan


def _scan_chunk(
    args: tuple[
        Expr,
        dict[str, Scalar],
        tuple[str, ...],
        tuple[tuple[Scalar, ...], ...],
        Expr | None,
        int | None,
        LookupTables | None,
    ],
) -> tuple[list[dict[str, Scalar]], list[Scalar], int]:
    """Scan one lexicographic block, stopping after `needed` hits when set."""
    chi, bound, free, value_lists, objective, needed, tables = args
    hits: list[dict[str, Scalar]] = []
    objs: list[Scalar] = []
    checked = 0
    for combo in itertools.product(*value_lists):
        checked += 1
        full = dict(bound)
        full.update(zip(free, combo))
        grounded = _ground_lookups(chi, full, tables) if tables else chi
        if _holds(grounded, full):
            hits.append(full)
            if objective is not None:
                obj = _ground_lookups(objective, full, tables) if tables else objective
                objs.append(eval_scalar(obj, full))
            if needed is not None and len(hits) >= needed:
                break
    return hits, objs, checked


def brute_force_solve(
    flat: CompleteRelation,
    qc: QueryClass,
    cap: int = 10**7,
    jobs: int = 1,
    catalog: Mapping[str, object] | None = None,
) -> EvalOutcome:
    """Enumerate the flat space in order, filter, and apply the query class.

    Decision queries stop at the first hit; limited satisfaction scans one
    past the limit to tell a complete listing from a truncated one;
    optimization keeps the best candidates with ties broken by enumeration
    order.  With jobs > 1 the space is split on the first free attribute
    and chunk results are merged in order, so answers match the serial run.
    The catalog backs lookup cells, which lower to materialized key maps.
    """
    bound = propagate_equalities(flat.chi, {}, flat.schema)
    free = tuple(a for a in flat.attrs if a not in bound)
    infinite = [a for a in free if not flat.domain_of(a).is_finite]
    if infinite:
        raise NotComputableError(
            f"attributes {infinite} range over infinite domains and are not "
            "pinned by equalities; use a solver backend"
        )
    value_lists = tuple(flat.domain_of(a).values() for a in free)
    total = math.prod(len(vs) for vs in value_lists)
    if total > cap:
        raise CapExceededError(f"{total} assignments exceed the cap ({cap})")

    if qc.kind == "decision":
        needed = 1
    elif qc.kind == "satisfaction_limited":
        needed = qc.limit + 1  # one extra hit distinguishes a truncation
    else:
        needed = None

    objective = qc.objective
    exprs = [flat.chi] + ([objective] if objective is not None else [])
    tables = _lookup_tables(exprs, catalog, cap) or None
    if jobs > 1 and value_lists and len(value_lists[0]) > 1:
        runs = _split(value_lists[0], jobs)
        chunks = [
            (flat.chi, bound, free, (run,) + value_lists[1:], objective, needed, tables)
            for run in runs
        ]
        hits: list[dict[str, Scalar]] = []
        objs: list[Scalar] = []
        checked = 0
        with ProcessPoolExecutor(max_workers=len(runs)) as pool:
            for part_hits, part_objs, part_checked in pool.map(_scan_chunk, chunks):
                hits.extend(part_hits)
                objs.extend(part_objs)
                checked += part_checked
    else:
        hits, objs, checked = _scan_chunk(
            (flat.chi, bound, free, value_lists, objective, needed, tables)
        )

    if not hits:
        return EvalOutcome(UNSATISFIABLE, (), None, checked)
    if qc.kind == "decision":
        return EvalOutcome(SATISFIED, (hits[0],), None, checked)
    if qc.kind in ("satisfaction_all", "satisfaction_limited"):
        if qc.limit is not None and len(hits) > qc.limit:
            return EvalOutcome(LIMIT_REACHED, tuple(hits[: qc.limit]), None, checked)
        return EvalOutcome(SATISFIED, tuple(hits), None, checked)
    order = sorted(
        range(len(hits)),
        key=lambda i: _cell_key(objs[i]),
        reverse=(qc.direction == "DESC"),
    )
    if qc.limit is not None:
        order = order[: qc.limit]
    return EvalOutcome(
        OPTIMAL,
        tuple(hits[i] for i in order),
        tuple(objs[i] for i in order),
        checked,
    )


def _split(values: Sequence[Scalar], jobs: int) -> list[tuple[Scalar, ...]]:
    parts = min(jobs, len(values))
    quot, rem = divmod(len(values), parts)
    runs = []
    at = 0
    for i in range(parts):
        size = quot + (1 if i < rem else 0)
        runs.append(tuple(values[at : at + size]))
        at += size
    return runs


# --------------------------------------------------------------------------
# point checks


def check_feasible(
    flat: CompleteRelation,
    assignment: Mapping[str, Scalar],
    catalog: Mapping[str, object] | None = None,
    cap: int = 10**7,
) -> bool:
    """Test one full flat assignment against domains and the constraint."""
    binding: dict[str, Scalar] = {}
    for a in flat.attrs:
        if a not in assignment:
            raise EvalError(f"assignment misses flat attribute {a!r}")
        dom = flat.domain_of(a)
        v = dom.coerce(assignment[a])
        if not dom.contains(v):
            return False
        binding[a] = v
    tables = _lookup_tables([flat.chi], catalog, cap)
    chi = _ground_lookups(flat.chi, binding, tables) if tables else flat.chi
    return _holds(chi, binding)


def objective_value(
    ff: FlatForm,
    assignment: Mapping[str, Scalar],
    catalog: Mapping[str, object] | None = None,
    cap: int = 10**7,
) -> Scalar:
    """Evaluate the objective at one full flat assignment."""
    if ff.objective is None:
        raise EvalError("query has no objective")
    flat = ff.flat
    binding = {a: flat.domain_of(a).coerce(assignment[a]) for a in flat.attrs}
    tables = _lookup_tables([ff.objective], catalog, cap)
    obj = _ground_lookups(ff.objective, binding, tables) if tables else ff.objective
    return eval_scalar(obj, binding)


# --------------------------------------------------------------------------
# reinstantiation


def _lookup_value(
    lk: SymLookup,
    candidate: Mapping[str, Scalar],
    catalog: Mapping[str, Relation | CompleteRelation] | None,
    cache: dict[str, Relation],
    cap: int,
) -> Scalar:
    source = cache.get(lk.source)
    if source is None:
        raw = (catalog or {}).get(lk.source)
        if raw is None:
            raise EvalError(f"lookup source {lk.source!r} is not in the catalog")
        if isinstance(raw, CompleteRelation):
            raw = cdr.project_eval(raw, raw.attrs, cap=cap, name=lk.source)
        cache[lk.source] = source = raw
    key = {
        a: _cell_value(e, candidate, catalog, cache, cap) for a, e in lk.conditions
    }
    matches = [
        r for r in source.rows() if all(r[a] == v for a, v in key.items())
    ]
    if len(matches) != 1:
        raise EvalError(
            "functional dependency violated by data: key "
            f"{key} matches {len(matches)} rows of {lk.source!r}"
        )
    return matches[0][lk.attr]


def _cell_value(
    cell: Cell,
    candidate: Mapping[str, Scalar],
    catalog: Mapping[str, Relation | CompleteRelation] | None,
    cache: dict[str, Relation],
    cap: int,
) -> Scalar:
    if isinstance(cell, SymRef):
        if cell.name not in candidate:
            raise EvalError(f"candidate has no value for {cell.name!r}")
        return candidate[cell.name]
    if isinstance(cell, SymLookup):
        return _lookup_value(cell, candidate, catalog, cache, cap)
    if isinstance(cell, Expr):

        def close(e: Expr) -> Expr:
            if isinstance(e, Const) and isinstance(e.value, (SymRef, SymLookup)):
                return Const(_cell_value(e.value, candidate, catalog, cache, cap))
            return e

        # flat-attribute references resolve against the candidate itself
        return eval_scalar(map_expr(cell, close), candidate)
    return cell


def reinstantiate(
    outcome: EvalOutcome,
    ff: FlatForm,
    attrs: Sequence[str],
    rank_attr: str | None = None,
    catalog: Mapping[str, Relation | CompleteRelation] | None = None,
    name: str | None = None,
    cap: int = 10**7,
) -> Relation:
    """Rebuild the projected relation from the solved candidates.

    Each candidate instantiates the symbolic table; a requested rank
    attribute tags the blocks 1.. in answer order, the objective appears
    as a column when its name is projected (per-row contributions when the
    translation derived them, the total otherwise), and the blocks are
    projected and unioned.
    """
    sym_doms = dict(ff.sym.schema)
    if rank_attr is not None and (rank_attr in sym_doms or rank_attr in attrs):
        raise SchemaError(f"rank attribute {rank_attr!r} collides with a column")
    objective_attr = None
    for a in attrs:
        if a in sym_doms:
            continue
        if a == ff.objective_name and ff.objective is not None:
            objective_attr = a
            continue
        raise SchemaError(f"projection on missing attribute {a!r}")

    header = ((rank_attr,) if rank_attr is not None else ()) + tuple(attrs)
    sym_attrs = ff.sym.attrs
    cache: dict[str, Relation] = {}
    rows_out: list[tuple[Scalar, ...]] = []
    obj_values: list[Scalar] = []
    for idx, candidate in enumerate(outcome.candidates, start=1):
        total = None
        if objective_attr is not None and ff.objective_terms is None:
            if outcome.objective_values is not None:
                total = outcome.objective_values[idx - 1]
            else:
                total = objective_value(ff, candidate, catalog, cap)
        for j, cells in enumerate(ff.sym.rows):
            vals: dict[str, Scalar] = {rank_attr: idx} if rank_attr is not None else {}
            for a, cell in zip(sym_attrs, cells):
                if a in header:
                    vals[a] = _cell_value(cell, candidate, catalog, cache, cap)
            if objective_attr is not None:
                if ff.objective_terms is not None:
                    vals[objective_attr] = _cell_value(
                        ff.objective_terms[j], candidate, catalog, cache, cap
                    )
                else:
                    vals[objective_attr] = total
                obj_values.append(vals[objective_attr])
            rows_out.append(tuple(vals[a] for a in header))

    schema = []
    if rank_attr is not None:
        schema.append((rank_attr, IntDom()))
    for a in attrs:
        if a == objective_attr:
            schema.append((a, _infer_domain(obj_values)))
        elif sym_doms.get(a) is not None:
            schema.append((a, sym_doms[a]))
        else:
            schema.append((a, _infer_domain([r[header.index(a)] for r in rows_out])))
    return Relation(name, tuple(schema), tuple(rows_out))


# --------------------------------------------------------------------------
# the full pipeline for one projected query


def run_projection(
    q,
    rank_attr: str | None,
    attrs: Sequence[str],
    catalog: Mapping[str, object],
    cap: int = 10**7,
    backend: str = "brute",
    name: str | None = None,
    solver_path: str | None = None,
    jobs: int = 1,
) -> Relation:
    """Translate one query, solve it on the chosen backend, reinstantiate."""
    ff = translate.translate_query(q, catalog, cap)
    qc = classify_query(ff)
    if backend == "brute":
        outcome = brute_force_solve(ff.flat, qc, cap=cap, jobs=jobs, catalog=catalog)
    elif backend == "mzn-solve":
        from . import mzn  # local import: optional external-solver path

        outcome = mzn.solve_with_minizinc(ff, qc, catalog=catalog, solver_path=solver_path)
    else:
        raise EvalError(f"unknown backend {backend!r}")
    return reinstantiate(
        outcome, ff, attrs, rank_attr, catalog=catalog, name=name, cap=cap
    )
