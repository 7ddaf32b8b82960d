"""Characteristic-function relations: syntactic operators, evaluation boundary."""

import pytest

from conftest import build_gst
from solq import cdr
from solq.adr import FloatDom, IntDom, IntRange, Relation
from solq.cdr import CompleteRelation, adr_as_cdr, equivalent, propagate_equalities
from solq.errors import EvalError, NotComputableError, SchemaError
from solq.expr import And, Attr, BinOp, Cmp, Const, Neg, Not, Or


def test_construct_checks_free_attrs():
    with pytest.raises(SchemaError, match="unknown attributes"):
        cdr.construct("C", (("a", IntDom()),), Cmp("=", Attr("b"), Const(1)))


def test_join_is_syntactic_conjunction():
    c = cdr.construct("C", (("a", IntRange(0, 3)),), Cmp(">", Attr("a"), Const(0)))
    d = cdr.construct("D", (("a", IntRange(0, 3)), ("b", IntRange(0, 3))),
                      Cmp("=", Attr("b"), Attr("a")))
    j = cdr.natural_join(c, d)
    assert j.attrs == ("a", "b")
    assert j.chi == And((c.chi, d.chi))
    assert cdr.project_eval(j, j.attrs).tuples == ((1, 1), (2, 2), (3, 3))


def test_cross_requires_disjoint_schemas():
    c = cdr.construct("C", (("a", IntRange(0, 1)),))
    with pytest.raises(SchemaError, match="disjoint"):
        cdr.cross(c, c)
    d = cdr.construct("D", (("b", IntRange(0, 1)),))
    x = cdr.cross(c, d)
    assert cdr.project_eval(x, x.attrs).tuples == ((0, 0), (0, 1), (1, 0), (1, 1))


def test_union_difference_same_attrs():
    s = (("a", IntRange(0, 3)),)
    c = cdr.construct("C", s, Cmp("<", Attr("a"), Const(2)))
    d = cdr.construct("D", s, Cmp("=", Attr("a"), Const(2)))
    assert cdr.project_eval(cdr.union(c, d), ("a",)).tuples == ((0,), (1,), (2,))
    assert cdr.project_eval(cdr.difference(c, d), ("a",)).tuples == ((0,), (1,))
    with pytest.raises(SchemaError, match="same attribute set"):
        cdr.union(c, cdr.construct("E", (("b", IntRange(0, 3)),)))


def test_select_conjoins_and_checks_attrs():
    c = cdr.construct("C", (("a", IntRange(0, 3)),))
    sel = cdr.select(c, Cmp(">=", Attr("a"), Const(2)))
    assert cdr.project_eval(sel, ("a",)).tuples == ((2,), (3,))
    with pytest.raises(SchemaError):
        cdr.select(c, Cmp("=", Attr("z"), Const(1)))


def test_rename_rewrites_chi():
    c = cdr.construct("C", (("a", IntRange(0, 2)),), Cmp("=", Attr("a"), Const(1)))
    r = cdr.rename(c, {"a": "x"})
    assert r.attrs == ("x",)
    assert cdr.project_eval(r, ("x",)).tuples == ((1,),)
    with pytest.raises(SchemaError, match="missing"):
        cdr.rename(c, {"z": "y"})


def test_adr_round_trip():
    r = Relation("R", (("a", IntRange(0, 3)), ("b", IntRange(0, 3))), ((1, 2), (3, 0)))
    c = adr_as_cdr(r)
    back = cdr.project_eval(c, c.attrs)
    assert back.tuples == r.tuples


def test_project_eval_projection_and_errors():
    c = cdr.construct(
        "C",
        (("a", IntRange(1, 2)), ("b", IntRange(1, 2))),
        Cmp("=", Attr("a"), Attr("b")),
    )
    assert cdr.project_eval(c, ("b",)).tuples == ((1,), (2,))
    with pytest.raises(SchemaError, match="no attribute"):
        cdr.project_eval(c, ("z",))


def test_project_eval_infinite_unpinned_raises():
    c = cdr.construct("C", (("x", FloatDom()),), Cmp(">", Attr("x"), Const(0)))
    with pytest.raises(NotComputableError, match="infinite"):
        cdr.project_eval(c, ("x",))


def test_project_eval_cap():
    c = cdr.construct("C", (("a", IntRange(0, 99)), ("b", IntRange(0, 99))))
    with pytest.raises(NotComputableError, match="cap"):
        cdr.project_eval(c, ("a",), cap=100)


def test_propagation_pins_infinite_attrs():
    gst = build_gst().gst
    got = propagate_equalities(gst.chi, {"price": 110.0}, gst.schema)
    assert got == {"price": 110.0, "gst": 10.0, "exgst": 100.0}


def test_propagation_inverts_each_operator():
    schema = (("x", FloatDom()), ("y", FloatDom()))
    cases = [
        (Cmp("=", BinOp("+", Attr("x"), Const(2)), Attr("y")), 5.0, 3.0),
        (Cmp("=", BinOp("-", Attr("x"), Const(2)), Attr("y")), 5.0, 7.0),
        (Cmp("=", BinOp("*", Attr("x"), Const(2)), Attr("y")), 5.0, 2.5),
        (Cmp("=", BinOp("/", Attr("x"), Const(2)), Attr("y")), 5.0, 10.0),
        (Cmp("=", BinOp("-", Const(2), Attr("x")), Attr("y")), 5.0, -3.0),
        (Cmp("=", BinOp("/", Const(2), Attr("x")), Attr("y")), 4.0, 0.5),
        (Cmp("=", Neg(Attr("x")), Attr("y")), 5.0, -5.0),
    ]
    for chi, y, expect_x in cases:
        got = propagate_equalities(chi, {"y": y}, schema)
        assert got["x"] == pytest.approx(expect_x), chi


def test_propagation_chains_through_conjuncts():
    schema = (("a", FloatDom()), ("b", FloatDom()), ("c", FloatDom()))
    chi = And(
        (
            Cmp("=", Attr("b"), BinOp("*", Attr("a"), Const(2))),
            Cmp("=", Attr("c"), BinOp("+", Attr("b"), Const(1))),
        )
    )
    got = propagate_equalities(chi, {"a": 3.0}, schema)
    assert got == {"a": 3.0, "b": 6.0, "c": 7.0}


def test_propagation_leaves_two_unknowns_alone():
    schema = (("a", FloatDom()), ("b", FloatDom()))
    chi = Cmp("=", Attr("a"), Attr("b"))
    assert propagate_equalities(chi, {}, schema) == {}


def test_propagation_domain_check():
    schema = (("a", IntRange(0, 5)), ("b", IntRange(0, 5)))
    chi = Cmp("=", Attr("b"), BinOp("+", Attr("a"), Const(10)))
    with pytest.raises(EvalError, match="outside domain"):
        propagate_equalities(chi, {"a": 0}, schema)


def test_join_with_adr_pins_from_data():
    g = build_gst()
    out = cdr.join_with_adr(g.prices, g.gst, name="WithGST")
    assert out.attrs == ("price", "gst", "exgst")
    assert out.tuples == ((55.0, 5.0, 50.0), (110.0, 10.0, 100.0))


def test_join_with_adr_reverse_direction():
    # bind the derived column and recover the price through inversion
    g = build_gst()
    known_gst = Relation("K", (("gst", FloatDom()),), ((10.0,),))
    out = cdr.join_with_adr(known_gst, g.gst)
    assert out.attrs == ("gst", "price", "exgst")
    assert out.tuples == ((10.0, 110.0, 100.0),)


def test_join_with_adr_enumerates_finite_leftovers():
    c = cdr.construct(
        "C",
        (("a", IntRange(0, 2)), ("b", IntRange(0, 2))),
        Cmp("!=", Attr("a"), Attr("b")),
    )
    r = Relation("R", (("a", IntRange(0, 2)),), ((0,),))
    out = cdr.join_with_adr(r, c)
    assert out.tuples == ((0, 1), (0, 2))


def test_join_with_adr_unpinned_infinite_raises():
    c = cdr.construct(
        "C", (("a", IntDom()), ("x", FloatDom())), Cmp(">", Attr("x"), Const(0))
    )
    r = Relation("R", (("a", IntDom()),), ((1,),))
    with pytest.raises(NotComputableError, match="pinned"):
        cdr.join_with_adr(r, c)


def test_join_with_adr_shared_domains_must_match():
    c = cdr.construct("C", (("a", IntRange(0, 1)), ("b", IntRange(0, 1))))
    r = Relation("R", (("a", IntDom()),), ((7,),))
    with pytest.raises(SchemaError, match="mismatched domains"):
        cdr.join_with_adr(r, c)


def test_equivalent_needs_probes_for_every_attr():
    g = build_gst()
    with pytest.raises(SchemaError, match="no probe values"):
        equivalent(g.gst, g.gst2, {"price": (0, 55)})


def test_equivalent_on_probe_grid():
    g = build_gst()
    prices = (0, 55, 110, 1000)
    probes = {
        "price": prices,
        "gst": tuple(p / 11 for p in prices),
        "exgst": tuple(p - p / 11 for p in prices),
    }
    assert equivalent(g.gst, g.gst2, probes)
    other = cdr.construct("X", g.gst.schema, Cmp("=", Attr("gst"), Attr("price")))
    assert not equivalent(g.gst, other, probes)
    assert not equivalent(g.gst, cdr.construct("Y", (("price", FloatDom()),)), probes)


def test_dnf_shortcut_matches_grid_enumeration():
    r = Relation("R", (("a", IntRange(0, 3)), ("b", IntRange(0, 3))), ((0, 1), (2, 3)))
    c = adr_as_cdr(r)
    grid = CompleteRelation(None, c.schema, Or((c.chi, Const(False))))
    assert cdr.project_eval(c, c.attrs).tuples == cdr.project_eval(grid, c.attrs).tuples
