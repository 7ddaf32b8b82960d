"""MiniZinc emission and solver-result handling.

Emission is pure text generation: identical flat forms give byte-identical
models.  Results come back through a small JSON document (candidates plus
status); when an external MiniZinc binary is available, its raw output is
adapted to that shape out of process.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import cdr
from .adr import (
    AttrDomain,
    BoolDom,
    FloatDom,
    FloatRange,
    IntRange,
    RefDom,
    Relation,
)
from .cdr import CompleteRelation
from .errors import EmitError, EvalError, SolverError
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
    Scalar,
    SymLookup,
    SymRef,
    conjuncts,
    walk,
)
from .translate import FlatForm

_RESERVED = frozenset(
    """ann annotation any array bool case constraint default diff div else
    elseif endif enum false float function if in include int intersect let
    list maximize minimize mod not of op opt output par predicate record
    satisfy set solve string subset superset symdiff test then true tuple
    type union var where xor""".split()
)

_BETWEEN_PREDICATE = (
    "predicate between(var float: x, float: lower, float: upper) =\n"
    "    lower <= x /\\ x <= upper;"
)


@dataclass(frozen=True)
class MznModel:
    """Emitted model text plus the flat-attribute naming map."""

    source: str
    var_names: dict[str, str]  # flat attr -> MiniZinc identifier

    def __post_init__(self) -> None:
        if len(set(self.var_names.values())) != len(self.var_names):
            raise EmitError("variable names must be bijective with flat attributes")


def _mangle(raw: str, taken: set[str]) -> str:
    base = "".join(ch if ch.isalnum() else "_" for ch in raw.lower())
    if not base or not base[0].isalpha():
        base = "v_" + base
    if base in _RESERVED:
        base += "_v"
    name = base
    n = 2
    while name in taken:
        name = f"{base}_{n}"
        n += 1
    taken.add(name)
    return name


def _float(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        raise EmitError(f"float value {v!r} is not emittable")
    return repr(v)


def _scalar(v: Scalar) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _float(v)
    raise EmitError(f"string value {v!r} is not emittable")


# --------------------------------------------------------------------------
# expression printing
#
# precedence levels, loosest first: or 1, and 2, not 3, comparison 4,
# additive 5, multiplicative 6, unary 7; calls and atoms delimit themselves

_CMP_OPS = {"=": "=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class _Printer:
    def __init__(
        self,
        var_names: Mapping[str, str],
        lookups: Mapping[tuple[str, str, str], tuple[str, str]],
    ) -> None:
        self.var_names = var_names
        self.lookups = lookups  # (source, key attr, value attr) -> (set, array)
        self.uses_between = False
        self.uses_all_different = False

    def top(self, e: Expr) -> str:
        return self._p(e, 1)

    def _name(self, attr: str) -> str:
        try:
            return self.var_names[attr]
        except KeyError:
            raise EmitError(f"no variable for attribute {attr!r}") from None

    def _p(self, e: Expr, min_prec: int) -> str:
        text, prec = self._render(e)
        if prec < min_prec:
            return f"({text})"
        return text

    def _render(self, e: Expr) -> tuple[str, int]:
        if isinstance(e, Const):
            v = e.value
            if isinstance(v, SymRef):
                return self._name(v.name), 9
            if isinstance(v, SymLookup):
                return self._access(v), 9
            if isinstance(v, (bool, int)) or isinstance(v, float):
                text = _scalar(v)
                return text, 7 if text.startswith("-") else 9
            raise EmitError(f"string value {v!r} is not emittable")
        if isinstance(e, Attr):
            return self._name(e.name), 9
        if isinstance(e, BinOp):
            if e.op in ("+", "-"):
                return f"{self._p(e.left, 5)} {e.op} {self._p(e.right, 6)}", 5
            if e.op in ("*", "/"):
                return f"{self._p(e.left, 6)} {e.op} {self._p(e.right, 7)}", 6
            raise EmitError(f"operator {e.op!r} is not emittable")
        if isinstance(e, Neg):
            return f"-{self._p(e.operand, 8)}", 7
        if isinstance(e, Func):
            args = ", ".join(self._p(a, 1) for a in e.args)
            return f"{e.name}({args})", 9
        if isinstance(e, Cmp):
            op = _CMP_OPS.get(e.op)
            if op is None:
                raise EmitError(f"comparison {e.op!r} is not emittable")
            return f"{self._p(e.left, 5)} {op} {self._p(e.right, 5)}", 4
        if isinstance(e, Between):
            self.uses_between = True
            parts = ", ".join(self._p(x, 1) for x in (e.value, e.low, e.high))
            return f"between({parts})", 9
        if isinstance(e, And):
            return " /\\ ".join(self._p(i, 3) for i in e.items), 2
        if isinstance(e, Or):
            return " \\/ ".join(self._p(i, 2) for i in e.items), 1
        if isinstance(e, Not):
            return f"not ({self._p(e.item, 1)})", 3
        if isinstance(e, AggCall):
            return self._agg(e), 9
        raise EmitError(f"{type(e).__name__} node is not emittable")

    def _agg(self, e: AggCall) -> str:
        fn = e.fn.lower()
        arr = "[" + ", ".join(self._p(a, 1) for a in e.args) + "]"
        if fn in ("sum", "min", "max"):
            return f"{fn}({arr})"
        if fn == "alldifferent":
            self.uses_all_different = True
            return f"all_different({arr})"
        if fn == "bool_and":
            return f"forall({arr})"
        if fn == "bool_or":
            return f"exists({arr})"
        raise EmitError(f"aggregate {e.fn!r} is not emittable")

    def _access(self, lk: SymLookup) -> str:
        if len(lk.conditions) != 1:
            raise EmitError("only single-key lookups are emittable")
        key_attr, key_expr = lk.conditions[0]
        names = self.lookups[(lk.source, key_attr, lk.attr)]
        return f"{names[1]}[{self._p(key_expr, 1)}]"


# --------------------------------------------------------------------------
# emission


def _element_type(values: Sequence[Scalar]) -> str:
    if all(isinstance(v, bool) for v in values):
        return "bool"
    if all(isinstance(v, int) and not isinstance(v, bool) for v in values):
        return "int"
    if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        return "float"
    raise EmitError("lookup column mixes non-numeric values")


def _collect_lookups(exprs: Sequence[Expr]) -> list[SymLookup]:
    found: list[SymLookup] = []
    seen: set[SymLookup] = set()
    for e in exprs:
        for node in walk(e):
            if isinstance(node, Const) and isinstance(node.value, SymLookup):
                if node.value not in seen:
                    seen.add(node.value)
                    found.append(node.value)
    return found


def _source_relation(
    name: str, catalog: Mapping[str, object] | None, cap: int
) -> Relation:
    raw = (catalog or {}).get(name)
    if raw is None:
        raise EmitError(f"lookup source {name!r} is not in the catalog")
    if isinstance(raw, CompleteRelation):
        raw = cdr.project_eval(raw, raw.attrs, cap=cap, name=name)
    if not isinstance(raw, Relation):
        raise EmitError(f"lookup source {name!r} is not a data relation")
    return raw


def emit_minizinc(
    ff: FlatForm,
    catalog: Mapping[str, object] | None = None,
    cap: int = 10**7,
) -> MznModel:
    """Emit the flattened query as MiniZinc text.

    One variable per flat attribute, one constraint per top-level conjunct,
    a solve item matching the ordering direction.  Lookup cells become
    arrays over a contiguous integer key set; reference domains become
    named sets.  The prelude carries only what the model uses.
    """
    taken: set[str] = set()
    var_names = {a: _mangle(a, taken) for a in ff.flat_attrs}

    chi_parts = [c for c in conjuncts(ff.flat.chi) if c != Const(True)]
    exprs: list[Expr] = list(chi_parts)
    if ff.objective is not None:
        exprs.append(ff.objective)

    # data arrays for lookups, keyed (source, key attr, value attr)
    lookups: dict[tuple[str, str, str], tuple[str, str]] = {}
    data_lines: list[str] = []
    index_sets: dict[tuple[str, str], str] = {}
    for lk in _collect_lookups(exprs):
        if len(lk.conditions) != 1:
            raise EmitError("only single-key lookups are emittable")
        key_attr = lk.conditions[0][0]
        lkey = (lk.source, key_attr, lk.attr)
        if lkey in lookups:
            continue
        rel = _source_relation(lk.source, catalog, cap)
        rows = rel.rows()
        keys = sorted(r[key_attr] for r in rows)
        if not keys or any(not isinstance(k, int) or isinstance(k, bool) for k in keys):
            raise EmitError(f"lookup keys of {lk.source!r} must be integers")
        if keys != list(range(keys[0], keys[-1] + 1)):
            raise EmitError(f"lookup keys of {lk.source!r} must be contiguous")
        by_key = {r[key_attr]: r[lk.attr] for r in rows}
        if len(by_key) != len(rows):
            raise EvalError(
                f"functional dependency violated by data: duplicate keys in {lk.source!r}"
            )
        set_name = index_sets.get((lk.source, key_attr))
        if set_name is None:
            set_name = _mangle(key_attr, taken)
            index_sets[(lk.source, key_attr)] = set_name
            data_lines.append(f"set of int: {set_name} = {keys[0]}..{keys[-1]};")
        values = [by_key[k] for k in keys]
        eltype = _element_type(values)
        if eltype == "float":
            values = [float(v) for v in values]
        arr_name = _mangle(lk.attr, taken)
        body = ", ".join(_scalar(v) for v in values)
        data_lines.append(f"array[{set_name}] of {eltype}: {arr_name} = [{body}];")
        lookups[lkey] = (set_name, arr_name)

    # named sets for reference domains, then variable declarations
    ref_sets: dict[str, str] = {}
    var_lines: list[str] = []
    for attr, dom in ff.flat.schema:
        var_lines.append(f"var {_domain_text(attr, dom, ref_sets, data_lines, taken)}: {var_names[attr]};")

    printer = _Printer(var_names, lookups)
    constraint_lines = [f"constraint {printer.top(c)};" for c in chi_parts]

    if ff.direction is None:
        solve_line = "solve satisfy;"
    else:
        word = "minimize" if ff.direction == "ASC" else "maximize"
        if ff.objective is None:
            raise EmitError("ordering direction set but no objective present")
        solve_line = f"solve {word} {printer.top(ff.objective)};"

    prelude: list[str] = []
    if printer.uses_all_different:
        prelude.append('include "globals.mzn";')
    if printer.uses_between:
        prelude.append(_BETWEEN_PREDICATE)

    blocks = [
        "\n\n".join(prelude),
        "\n".join(data_lines),
        "\n".join(var_lines),
        "\n".join(constraint_lines),
        solve_line,
    ]
    source = "\n\n".join(b for b in blocks if b) + "\n"
    return MznModel(source, var_names)


def _domain_text(
    attr: str,
    dom: AttrDomain,
    ref_sets: dict[str, str],
    data_lines: list[str],
    taken: set[str],
) -> str:
    if isinstance(dom, IntRange):
        return f"{dom.lo}..{dom.hi}"
    if isinstance(dom, FloatRange):
        return f"{_float(dom.lo)}..{_float(dom.hi)}"
    if isinstance(dom, FloatDom):
        return "float"
    if isinstance(dom, BoolDom):
        return "bool"
    if isinstance(dom, RefDom):
        members = dom.values()
        if any(not isinstance(m, int) or isinstance(m, bool) for m in members):
            raise EmitError(f"domain {dom} of {attr!r} is not emittable")
        if dom.source is None:
            return "{" + ", ".join(str(m) for m in members) + "}"
        set_name = ref_sets.get(dom.source)
        if set_name is None:
            set_name = _mangle(dom.source, taken)
            ref_sets[dom.source] = set_name
            body = ", ".join(str(m) for m in members)
            data_lines.append(f"set of int: {set_name} = {{{body}}};")
        return set_name
    raise EmitError(f"domain {dom} of {attr!r} is not emittable")


# --------------------------------------------------------------------------
# results


def parse_solver_result(
    text: str, var_names: Mapping[str, str] | None = None
) -> "EvalOutcome":
    """Read the result document: {"candidates": [...], "status": "..."}.

    With a naming map, candidate keys are translated from MiniZinc
    identifiers back to flat attributes and must cover all of them.
    """
    from .evaluate import STATUSES, EvalOutcome

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EvalError(f"malformed result document: {exc}") from None
    if not isinstance(doc, dict) or "candidates" not in doc or "status" not in doc:
        raise EvalError("result document needs 'candidates' and 'status'")
    status = doc["status"]
    if status not in STATUSES:
        raise EvalError(f"unknown status {status!r}")
    raw = doc["candidates"]
    if not isinstance(raw, list) or not all(isinstance(c, dict) for c in raw):
        raise EvalError("'candidates' must be a list of objects")
    back = None
    if var_names is not None:
        back = {ident: attr for attr, ident in var_names.items()}
    candidates = []
    for entry in raw:
        if back is None:
            candidates.append(dict(entry))
            continue
        cand = {}
        for ident, value in entry.items():
            attr = back.get(ident)
            if attr is not None:
                cand[attr] = value
        missing = [a for a in var_names if a not in cand]
        if missing:
            raise EvalError(f"candidate misses attributes {missing}")
        candidates.append(cand)
    return EvalOutcome(status, tuple(candidates))


def find_solver(solver_path: str | None = None) -> str | None:
    """Locate a MiniZinc executable: explicit path, SOLQ_SOLVER, then PATH."""
    import os

    for candidate in (solver_path, os.environ.get("SOLQ_SOLVER")):
        if candidate:
            found = shutil.which(candidate)
            if found:
                return found
            if Path(candidate).is_file():
                return candidate
            raise SolverError(f"solver {candidate!r} not found")
    return shutil.which("minizinc")


def _adapt_output(raw: str, qc, var_names: Mapping[str, str]) -> str:
    """Convert raw `minizinc --output-mode json` text to the result document."""
    solutions: list[dict] = []
    buf: list[str] = []
    complete = False
    unsat = False
    for line in raw.splitlines():
        stripped = line.strip()
        if stripped == "----------":
            if buf:
                try:
                    solutions.append(json.loads("\n".join(buf)))
                except json.JSONDecodeError as exc:
                    raise SolverError(f"unparsable solver solution: {exc}") from None
                buf = []
        elif stripped == "==========":
            complete = True
        elif "UNSATISFIABLE" in stripped and stripped.startswith("====="):
            unsat = True
        elif stripped.startswith("%") or not stripped:
            continue
        else:
            buf.append(line)

    if unsat or (not solutions and complete):
        doc = {"candidates": [], "status": "UNSATISFIABLE"}
    elif qc.kind == "optimization":
        if not solutions:
            raise SolverError("solver produced no solution")
        doc = {"candidates": [solutions[-1]], "status": "OPTIMAL"}
    elif qc.kind == "decision":
        if not solutions:
            raise SolverError("solver produced no solution")
        doc = {"candidates": [solutions[0]], "status": "SATISFIED"}
    elif qc.kind == "satisfaction_limited" and len(solutions) > qc.limit:
        doc = {"candidates": solutions[: qc.limit], "status": "LIMIT_REACHED"}
    else:
        if not solutions:
            raise SolverError("solver produced no solution")
        doc = {"candidates": solutions, "status": "SATISFIED"}
    return json.dumps(doc)


def solve_with_minizinc(
    ff: FlatForm,
    qc,
    catalog: Mapping[str, object] | None = None,
    solver_path: str | None = None,
    timeout: float = 60.0,
    cap: int = 10**7,
) -> "EvalOutcome":
    """Emit, run the external solver, and parse its answer.

    Solution order is whatever the solver reports; only optimization and
    decision answers are order-stable.
    """
    exe = find_solver(solver_path)
    if exe is None:
        raise SolverError(
            "no MiniZinc executable found (set --solver-path or SOLQ_SOLVER)"
        )
    model = emit_minizinc(ff, catalog, cap)
    args = [exe, "--output-mode", "json"]
    if qc.kind == "satisfaction_all":
        args.append("--all-solutions")
    elif qc.kind == "satisfaction_limited":
        args.extend(["--num-solutions", str(qc.limit + 1)])
    with tempfile.TemporaryDirectory(prefix="solq-mzn-") as tmp:
        path = Path(tmp) / "model.mzn"
        path.write_text(model.source, encoding="utf-8")
        try:
            proc = subprocess.run(
                args + [str(path)],
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise SolverError(f"solver invocation failed: {exc}") from None
    if proc.returncode != 0:
        raise SolverError(
            f"solver exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
        )
    return parse_solver_result(_adapt_output(proc.stdout, qc, model.var_names), model.var_names)
