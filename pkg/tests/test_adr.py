"""Finite relations: construction, canonical order, operators."""

import pytest

from solq import adr
from solq.adr import (
    BoolDom,
    EnumDom,
    FloatDom,
    IntDom,
    IntRange,
    RefDom,
    Relation,
    VarcharDom,
    group_aggregate,
    order_limit,
)
from solq.errors import EvalError, SchemaError
from solq.expr import AggCall, Attr, BinOp, Cmp, Const, Not, Rel

S2 = (("a", IntRange(0, 9)), ("b", IntRange(0, 9)))


def test_construction_dedupes_and_sorts():
    r = Relation("R", S2, ((3, 1), (1, 2), (3, 1), (1, 1)))
    assert r.tuples == ((1, 1), (1, 2), (3, 1))
    assert r.attrs == ("a", "b")
    assert len(r) == 3


def test_construction_coerces_ints_into_float_domains():
    r = Relation("R", (("x", FloatDom()),), ((1,), (2.5,)))
    assert r.tuples == ((1.0,), (2.5,))
    assert all(isinstance(t[0], float) for t in r.tuples)


def test_domain_violations():
    with pytest.raises(SchemaError, match="outside domain"):
        Relation("R", S2, ((10, 0),))
    with pytest.raises(SchemaError, match="cells"):
        Relation("R", S2, ((1,),))
    with pytest.raises(SchemaError, match="duplicate"):
        Relation("R", (("a", IntDom()), ("a", IntDom())), ())
    with pytest.raises(SchemaError):
        Relation("R", (("x", BoolDom()),), ((1,),))  # int is not a bool


def test_mixed_value_kinds_sort_deterministically():
    r = Relation(
        "R",
        (("x", VarcharDom()), ("n", IntDom())),
        (("b", 1), ("a", 2), ("a", 1)),
    )
    assert r.tuples == (("a", 1), ("a", 2), ("b", 1))


def test_domain_helpers():
    assert IntRange(1, 3).values() == (1, 2, 3)
    assert BoolDom().values() == (False, True)
    assert EnumDom(("y", "x")).values() == ("x", "y")
    assert RefDom((2, 1)).values() == (1, 2)
    with pytest.raises(SchemaError):
        IntRange(2, 1)
    with pytest.raises(SchemaError):
        RefDom(())
    with pytest.raises(SchemaError):
        RefDom((1, "a"))
    assert not IntRange(1, 3).contains(True)  # bools are not range members


def test_select_project_rename():
    r = Relation("R", S2, ((1, 1), (1, 2), (2, 1)))
    assert adr.select(r, Cmp("=", Attr("a"), Const(1))).tuples == ((1, 1), (1, 2))
    assert adr.project(r, ("b",)).tuples == ((1,), (2,))
    renamed = adr.rename(r, {"a": "x"})
    assert renamed.attrs == ("x", "b")
    with pytest.raises(SchemaError, match="unknown"):
        adr.select(r, Cmp("=", Attr("z"), Const(1)))
    with pytest.raises(SchemaError, match="missing"):
        adr.project(r, ("z",))
    with pytest.raises(EvalError):
        adr.select(r, BinOp("+", Attr("a"), Const(1)))


def test_rename_collision_rejected():
    r = Relation("R", S2, ())
    with pytest.raises(SchemaError):
        adr.rename(r, {"a": "b"})


def test_natural_join_and_cross():
    r = Relation("R", S2, ((1, 1), (2, 2)))
    s = Relation(
        "S", (("b", IntRange(0, 9)), ("c", VarcharDom())), ((1, "x"), (1, "y"), (3, "z"))
    )
    j = adr.natural_join(r, s)
    assert j.attrs == ("a", "b", "c")
    assert j.tuples == ((1, 1, "x"), (1, 1, "y"))
    t = Relation("T", (("d", IntDom()),), ((7,),))
    assert adr.cross(r, t).tuples == ((1, 1, 7), (2, 2, 7))
    with pytest.raises(SchemaError, match="disjoint"):
        adr.cross(r, Relation("U", (("a", IntRange(0, 9)),), ()))
    with pytest.raises(SchemaError, match="mismatched domains"):
        adr.natural_join(r, Relation("V", (("b", IntDom()),), ((1,),)))


def test_set_operators():
    r = Relation("R", S2, ((1, 1), (2, 2)))
    s = Relation("S", S2, ((2, 2), (3, 3)))
    assert adr.union(r, s).tuples == ((1, 1), (2, 2), (3, 3))
    assert adr.intersect(r, s).tuples == ((2, 2),)
    assert adr.difference(r, s).tuples == ((1, 1),)
    with pytest.raises(SchemaError, match="identical schemas"):
        adr.union(r, Relation("T", (("a", IntRange(0, 9)),), ()))


def test_group_aggregate_grouped():
    r = Relation(
        "R",
        (("g", IntRange(1, 2)), ("v", IntDom())),
        ((1, 10), (1, 20), (2, 5)),
    )
    out = group_aggregate(r, ("g",), ((AggCall("sum", (Attr("v"),)), "total"),))
    assert out.attrs == ("g", "total")
    assert out.tuples == ((1, 30), (2, 5))


def test_group_aggregate_empty_grouping_is_one_row():
    r = Relation("R", (("v", IntDom()),), ((1,), (2,)))
    out = group_aggregate(r, (), ((AggCall("sum", (Attr("v"),)), "s"),))
    assert out.tuples == ((3,),)
    empty = Relation("E", (("v", IntDom()),), ())
    out = group_aggregate(
        empty,
        (),
        (
            (AggCall("sum", (Attr("v"),)), "s"),
            (AggCall("count", ()), "n"),
            (AggCall("bool_and", (Cmp(">", Attr("v"), Const(0)),)), "all_pos"),
        ),
    )
    assert out.tuples == ((0, 0, True),)


def test_group_aggregate_alldifferent_per_group():
    r = Relation(
        "R",
        (("row", IntRange(1, 2)), ("value", IntRange(1, 2))),
        ((1, 1), (1, 2), (2, 2), (2, 2)),
    )
    out = group_aggregate(
        r, ("row",), ((AggCall("alldifferent", (Attr("value"),)), "ret"),)
    )
    assert out.tuples == ((1, True), (2, True))  # (2,2) dedupes to one tuple
    r2 = Relation("R2", r.schema, ((1, 1), (1, 1)))
    out2 = group_aggregate(
        r2, ("row",), ((AggCall("alldifferent", (Attr("value"),)), "ret"),)
    )
    assert out2.tuples == ((1, True),)


def test_group_aggregate_hassubset_needs_catalog():
    r = Relation("R", S2, ((1, 1),))
    req = Relation("Req", S2, ((1, 1),))
    out = group_aggregate(
        r, (), ((AggCall("hassubset", (Rel("Req"),)), "ok"),), catalog={"Req": req}
    )
    assert out.tuples == ((True,),)


def test_group_aggregate_errors():
    r = Relation("R", S2, ((1, 1),))
    with pytest.raises(SchemaError, match="missing attribute"):
        group_aggregate(r, ("z",), ((AggCall("count", ()), "n"),))
    with pytest.raises(SchemaError, match="duplicate output"):
        group_aggregate(r, ("a",), ((AggCall("count", ()), "a"),))
    with pytest.raises(SchemaError, match="at least one"):
        group_aggregate(r, ("a",), ())


def test_order_limit():
    r = Relation("R", S2, ((1, 3), (2, 2), (3, 1)))
    by_b = order_limit(r, ((Attr("b"), "ASC"),))
    assert by_b == ((3, 1), (2, 2), (1, 3))
    top1 = order_limit(r, ((Attr("b"), "DESC"),), limit=1)
    assert top1 == ((1, 3),)
    with pytest.raises(SchemaError):
        order_limit(r, ((Attr("b"), "UP"),))


def test_order_limit_ties_keep_canonical_order():
    r = Relation("R", S2, ((2, 1), (1, 1), (3, 1)))
    assert order_limit(r, ((Attr("b"), "ASC"),)) == ((1, 1), (2, 1), (3, 1))


def test_not_in_selection():
    r = Relation("R", (("x", BoolDom()),), ((True,), (False,)))
    assert adr.select(r, Not(Attr("x"))).tuples == ((False,),)
