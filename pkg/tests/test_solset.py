"""Solution sets: exponentiation, restriction, lifting, ordering."""

import itertools

import pytest

from conftest import build_latin
from solq import cdr, solset
from solq.adr import IntRange, Relation
from solq.errors import CapExceededError, SchemaError
from solq.expr import AggCall, Attr, BinOp, Cmp, Const
from solq.solset import (
    CandidateRef,
    ChiAnd,
    ChiConst,
    GammaAtom,
    GroupAgg,
    JoinRel,
    RankedQuery,
    Select,
    SolutionSet,
    TRUE_CHI,
    candidate_count,
    decision_extension,
    enumerate_candidates,
    interpret_chi,
    lift_atom,
)


def _base(n: int) -> Relation:
    return Relation("B", (("i", IntRange(1, 3)),), tuple((k,) for k in range(1, n + 1)))


def _decision(m: int) -> cdr.CompleteRelation:
    return cdr.construct("D", (("v", IntRange(1, m)),))


def test_construct_defaults_to_the_unit():
    u = solset.construct()
    assert len(u.base) == 1
    assert u.base.tuples == ((),)
    assert candidate_count(u) == 1
    assert u.chi == TRUE_CHI


def test_base_and_decision_must_not_share_attrs():
    b = Relation("B", (("v", IntRange(1, 2)),), ((1,),))
    with pytest.raises(SchemaError, match="share"):
        solset.construct(b, _decision(2))


def test_exponentiation_law():
    for n, m in itertools.product((1, 2, 3), repeat=2):
        u = solset.construct(_base(n), _decision(m))
        assert candidate_count(u) == m**n
        cands = enumerate_candidates(u)
        assert len(cands) == m**n
        assert len({c.tuples for c in cands}) == m**n


def test_candidates_are_total_functions():
    # the function view must coincide with filtering subsets of base x ext(D)
    # for the total-function property
    u = solset.construct(_base(2), _decision(2))
    pairs = [bt + dt for bt in u.base.tuples for dt in decision_extension(u)]
    from_subsets = set()
    for picks in itertools.product((0, 1), repeat=len(pairs)):
        chosen = tuple(p for p, keep in zip(pairs, picks) if keep)
        assigned = [p[0] for p in chosen]
        if sorted(assigned) == sorted(t[0] for t in u.base.tuples):
            from_subsets.add(tuple(sorted(chosen)))
    from_functions = {tuple(sorted(c.tuples)) for c in enumerate_candidates(u)}
    assert from_functions == from_subsets


def test_enumerate_candidates_order_and_cap():
    u = solset.construct(_base(2), _decision(2))
    flat = [
        tuple(t[-1] for t in c.tuples)  # (v at base 1, v at base 2)
        for c in enumerate_candidates(u)
    ]
    assert flat == [(1, 1), (1, 2), (2, 1), (2, 2)]
    with pytest.raises(CapExceededError):
        enumerate_candidates(solset.construct(_base(3), _decision(3)), cap=10)


def test_select_requires_boolean_spec():
    u = solset.construct(_base(2), _decision(2))
    good = GammaAtom(AggCall("bool_and", (Cmp(">", Attr("v"), Const(0)),)), CandidateRef())
    assert solset.select(u, good).chi == good
    with pytest.raises(SchemaError, match="boolean"):
        solset.select(u, GammaAtom(AggCall("sum", (Attr("v"),)), CandidateRef()))


def test_select_stacks_restrictions_conjunctively():
    u = solset.construct(_base(2), _decision(2))
    a1 = GammaAtom(AggCall("alldifferent", (Attr("v"),)), CandidateRef())
    a2 = GammaAtom(AggCall("bool_and", (Cmp("<", Attr("v"), Const(2)),)), CandidateRef())
    u2 = solset.select(solset.select(u, a1), a2)
    assert u2.chi == ChiAnd((a1, a2))


def test_atom_spec_must_contain_an_aggregate():
    with pytest.raises(SchemaError, match="aggregate"):
        GammaAtom(Cmp(">", Attr("v"), Const(0)), CandidateRef())


def test_selection_over_candidate_sees_only_base_attrs():
    u = solset.construct(_base(2), _decision(2))
    bad = GammaAtom(
        AggCall("bool_and", (Attr("ok"),)),
        GroupAgg(
            Select(CandidateRef(), Cmp("=", Attr("v"), Const(1))),
            (),
            ((AggCall("bool_or", (Cmp(">", Attr("i"), Const(0)),)), "ok"),),
        ),
    )
    with pytest.raises(SchemaError, match="decision"):
        solset.select(u, bad)
    fine = GammaAtom(
        AggCall("bool_and", (Attr("ok"),)),
        GroupAgg(
            Select(CandidateRef(), Cmp("=", Attr("i"), Const(1))),
            (),
            ((AggCall("bool_or", (Cmp(">", Attr("v"), Const(0)),)), "ok"),),
        ),
    )
    solset.select(u, fine)


def test_lift_wraps_atom_per_partner_group():
    atom = GammaAtom(AggCall("alldifferent", (Attr("v"),)), CandidateRef(), "ret")
    lifted = lift_atom(atom, ("col",))
    assert lifted.spec == AggCall("bool_and", (Attr("ret"),))
    assert lifted.body == GroupAgg(CandidateRef(), ("col",), ((atom.spec, "ret"),))
    assert lift_atom(atom, ()) == atom  # nullary partner: identity


def test_natural_join_merges_spaces_and_lifts_both_sides():
    rows = Relation("Rows", (("row", IntRange(1, 2)),), ((1,), (2,)))
    cols = Relation("Cols", (("col", IntRange(1, 2)),), ((1,), (2,)))
    values = cdr.construct("Values", (("value", IntRange(1, 2)),))
    alldiff = GammaAtom(AggCall("alldifferent", (Attr("value"),)), CandidateRef())
    u = solset.select(solset.construct(rows, values), alldiff)
    v = solset.select(solset.construct(cols, values), alldiff)
    j = solset.natural_join(u, v, name="J")
    assert j.base.attrs == ("row", "col")
    assert len(j.base) == 4
    assert j.decision.attrs == ("value",)
    assert isinstance(j.chi, ChiAnd) and len(j.chi.items) == 2
    lifted_u, lifted_v = j.chi.items
    assert lifted_u.body.grouping == ("col",)
    assert lifted_v.body.grouping == ("row",)


def test_joined_restrictions_pick_the_latin_squares():
    rows = Relation("Rows", (("row", IntRange(1, 2)),), ((1,), (2,)))
    cols = Relation("Cols", (("col", IntRange(1, 2)),), ((1,), (2,)))
    values = cdr.construct("Values", (("value", IntRange(1, 2)),))
    alldiff = GammaAtom(AggCall("alldifferent", (Attr("value"),)), CandidateRef())
    j = solset.natural_join(
        solset.select(solset.construct(rows, values), alldiff),
        solset.select(solset.construct(cols, values), alldiff),
    )
    kept = [c for c in enumerate_candidates(j) if interpret_chi(j.chi, c, {})]
    direct = build_latin()
    kept_direct = [
        c
        for c in enumerate_candidates(direct.effective)
        if interpret_chi(direct.effective.chi, c, direct.catalog)
    ]
    assert {c.tuples for c in kept} == {c.tuples for c in kept_direct}
    assert len(kept) == 2


def test_cross_requires_disjoint_candidates():
    u = solset.construct(_base(1), _decision(1))
    with pytest.raises(SchemaError, match="disjoint"):
        solset.cross(u, u)


def test_aligned_set_operators():
    u = solset.construct(_base(2), _decision(2))
    a = GammaAtom(AggCall("alldifferent", (Attr("v"),)), CandidateRef())
    b = GammaAtom(AggCall("bool_and", (Cmp("=", Attr("v"), Const(1)),)), CandidateRef())
    su, sv = solset.select(u, a), solset.select(u, b)

    def kept(w):
        return {
            c.tuples for c in enumerate_candidates(w) if interpret_chi(w.chi, c, {})
        }

    assert kept(solset.intersect(su, sv)) == kept(su) & kept(sv)
    assert kept(solset.union(su, sv)) == kept(su) | kept(sv)
    assert kept(solset.difference(su, sv)) == kept(su) - kept(sv)
    other = solset.construct(_base(1), _decision(2))
    with pytest.raises(SchemaError, match="identical bases"):
        solset.union(su, solset.select(other, a))


def test_rename_touches_base_decision_and_atoms():
    u = solset.construct(_base(2), _decision(2))
    a = GammaAtom(AggCall("alldifferent", (Attr("v"),)), CandidateRef())
    r = solset.rename(solset.select(u, a), {"v": "w", "i": "j"})
    assert r.base.attrs == ("j",)
    assert r.decision.attrs == ("w",)
    assert r.chi.spec == AggCall("alldifferent", (Attr("w"),))


def test_order_limit_rules():
    u = solset.construct(_base(2), _decision(2))
    obj = GammaAtom(AggCall("sum", (Attr("v"),)), CandidateRef(), "total")
    ranked = solset.order_limit(u, "DESC", obj)
    assert isinstance(ranked, RankedQuery)
    assert ranked.direction == "DESC" and ranked.limit is None
    topk = solset.order_limit(ranked, limit=3)
    assert topk.limit == 3
    with pytest.raises(SchemaError, match="already has an objective"):
        solset.order_limit(ranked, "ASC", obj)
    with pytest.raises(SchemaError, match="after a limit"):
        solset.order_limit(solset.order_limit(u, limit=1), "ASC", obj)
    with pytest.raises(SchemaError, match="orderable"):
        solset.order_limit(
            u, "ASC", GammaAtom(AggCall("bool_and", (Attr("v"),)), CandidateRef())
        )
    with pytest.raises(SchemaError, match="at least 1"):
        solset.order_limit(u, limit=0)
    with pytest.raises(SchemaError, match="ASC or DESC"):
        solset.order_limit(u, "sideways", obj)


def test_interpret_chi_connectives():
    u = solset.construct(_base(1), _decision(2))
    cand = enumerate_candidates(u)[0]
    t = ChiConst(True)
    a = GammaAtom(AggCall("bool_and", (Cmp("=", Attr("v"), Const(1)),)), CandidateRef())
    assert interpret_chi(t, cand, {}) is True
    assert interpret_chi(solset.ChiNot(a), cand, {}) == (
        not interpret_chi(a, cand, {})
    )
    assert interpret_chi(solset.ChiOr((t, a)), cand, {}) is True


def test_eval_iexpr_join_and_group():
    u = build_latin()
    cand = enumerate_candidates(u.search)[0]
    joined = solset.eval_iexpr(JoinRel(CandidateRef(), "ReqValues"), cand, u.catalog)
    assert joined.attrs == ("row", "col", "value")
    grouped = solset.eval_iexpr(
        GroupAgg(CandidateRef(), ("row",), ((AggCall("count", ()), "n"),)),
        cand,
        u.catalog,
    )
    assert grouped.tuples == ((1, 2), (2, 2))
