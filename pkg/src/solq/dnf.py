"""Disjunctive normal form over attribute-equality atoms.

A finite relation can be carried intensionally as a disjunction of full
assignments (one conjunction of attr = const atoms per tuple).  This module
normalizes boolean combinations of such encodings back into that shape:
conflicting equalities kill a disjunct, negated equalities are resolved
against the positive bindings where possible and kept as residual literals
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DnfError
from .expr import And, Attr, Cmp, Const, Expr, Not, Or, Scalar

MAX_DISJUNCTS = 10**6


@dataclass(frozen=True)
class Disjunct:
    """One conjunction: positive bindings plus residual negated equalities."""

    pos: tuple[tuple[str, Scalar], ...]  # sorted by attribute
    neg: frozenset[tuple[str, Scalar]]


def to_dnf(expr: Expr, max_disjuncts: int = MAX_DISJUNCTS) -> Expr:
    """Normalize a formula over =, AND, OR, NOT into Or-of-And shape.

    Raises DnfError when the formula contains other node kinds or the
    disjunct count would exceed `max_disjuncts`.
    """
    ds = _normalize(expr, negate=False, cap=max_disjuncts)
    return _rebuild(ds)


def dnf_disjuncts(expr: Expr, max_disjuncts: int = MAX_DISJUNCTS) -> list[Disjunct]:
    return _normalize(expr, negate=False, cap=max_disjuncts)


def is_adr_dnf(expr: Expr, attrs: Sequence[str]) -> bool:
    """True when expr is a disjunction of full positive assignments of attrs.

    Every disjunct must equate each attribute exactly once and contain no
    other literal.  A single conjunction (or single atom) counts as a
    one-disjunct DNF; Const(False) is the empty relation.
    """
    if expr == Const(False):
        return True
    want = set(attrs)
    for disjunct in expr.items if isinstance(expr, Or) else (expr,):
        atoms = disjunct.items if isinstance(disjunct, And) else (disjunct,)
        seen: set[str] = set()
        for atom in atoms:
            bound = _as_equality(atom)
            if bound is None:
                return False
            a, _ = bound
            if a in seen or a not in want:
                return False
            seen.add(a)
        if seen != want:
            return False
    return True


def _as_equality(atom: Expr) -> tuple[str, Scalar] | None:
    if isinstance(atom, Cmp) and atom.op == "=":
        if isinstance(atom.left, Attr) and isinstance(atom.right, Const):
            if not isinstance(atom.right.value, (bool, int, float, str)):
                return None
            return (atom.left.name, atom.right.value)
        if isinstance(atom.right, Attr) and isinstance(atom.left, Const):
            if not isinstance(atom.left.value, (bool, int, float, str)):
                return None
            return (atom.right.name, atom.left.value)
    return None


def _normalize(expr: Expr, negate: bool, cap: int) -> list[Disjunct]:
    if isinstance(expr, Const) and isinstance(expr.value, bool):
        truth = expr.value != negate
        return [Disjunct((), frozenset())] if truth else []
    if isinstance(expr, Not):
        return _normalize(expr.item, not negate, cap)
    if isinstance(expr, (And, Or)):
        conj = isinstance(expr, And) != negate  # De Morgan under negation
        parts = [_normalize(i, negate, cap) for i in expr.items]
        if conj:
            return _conjoin_all(parts, cap)
        merged: list[Disjunct] = []
        for p in parts:
            merged.extend(p)
        return _dedupe(merged, cap)
    eq = _as_equality(expr)
    if eq is not None:
        if negate:
            return [Disjunct((), frozenset((eq,)))]
        return [Disjunct((eq,), frozenset())]
    raise DnfError(f"not convertible to equality DNF: {expr!r}")


def _conjoin_all(parts: list[list[Disjunct]], cap: int) -> list[Disjunct]:
    acc = [Disjunct((), frozenset())]
    for part in parts:
        nxt: list[Disjunct] = []
        for d1 in acc:
            for d2 in part:
                merged = _merge(d1, d2)
                if merged is not None:
                    nxt.append(merged)
            if len(nxt) > cap:
                raise DnfError(f"disjunct count exceeds guard ({cap})")
        acc = _dedupe(nxt, cap)
    return acc


def _merge(d1: Disjunct, d2: Disjunct) -> Disjunct | None:
    pos = dict(d1.pos)
    for a, c in d2.pos:
        if a in pos:
            if pos[a] != c:
                return None  # conflicting equalities: drop the disjunct
        else:
            pos[a] = c
    neg: set[tuple[str, Scalar]] = set()
    for a, c in d1.neg | d2.neg:
        if a in pos:
            if pos[a] == c:
                return None  # a=c AND a!=c
            continue  # satisfied outright, discard the literal
        neg.add((a, c))
    return Disjunct(tuple(sorted(pos.items(), key=lambda it: it[0])), frozenset(neg))


def _dedupe(ds: Iterable[Disjunct], cap: int) -> list[Disjunct]:
    seen: set[tuple] = set()
    out: list[Disjunct] = []
    for d in ds:
        key = (d.pos, d.neg)
        if key not in seen:
            seen.add(key)
            out.append(d)
    if len(out) > cap:
        raise DnfError(f"disjunct count exceeds guard ({cap})")
    return out


def _rebuild(ds: list[Disjunct]) -> Expr:
    if not ds:
        return Const(False)
    terms: list[Expr] = []
    for d in ds:
        atoms: list[Expr] = [Cmp("=", Attr(a), Const(c)) for a, c in d.pos]
        atoms.extend(
            Not(Cmp("=", Attr(a), Const(c)))
            for a, c in sorted(d.neg, key=lambda it: (it[0], repr(it[1])))
        )
        if not atoms:
            return Const(True)  # an empty conjunction absorbs everything
        terms.append(atoms[0] if len(atoms) == 1 else And(tuple(atoms)))
    return terms[0] if len(terms) == 1 else Or(tuple(terms))
