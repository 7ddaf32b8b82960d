"""Shared constructors for the worked examples, built directly on the API.

The same problems ship as surface programs under fixtures/; building them a
second time here keeps the frontend and the algebra independently testable
(a frontend bug cannot hide an algebra bug, and vice versa).
"""

from __future__ import annotations

from pathlib import Path
from types import SimpleNamespace

from solq import cdr, solset
from solq.adr import (
    BoolDom,
    FloatDom,
    IntDom,
    IntRange,
    RefDom,
    Relation,
    VarcharDom,
)
from solq.expr import (
    AggCall,
    And,
    Attr,
    Between,
    BinOp,
    Cmp,
    Const,
    Func,
    Not,
    Or,
    Rel,
)
from solq.solset import CandidateRef, ChiAnd, GammaAtom, GroupAgg, JoinRel

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def build_latin() -> SimpleNamespace:
    board = Relation(
        "Board",
        (("row", IntRange(1, 2)), ("col", IntRange(1, 2))),
        ((1, 1), (1, 2), (2, 1), (2, 2)),
    )
    values = cdr.construct("Values", (("value", IntRange(1, 2)),))
    req = Relation(
        "ReqValues",
        (("row", IntRange(1, 2)), ("col", IntRange(1, 2)), ("value", IntRange(1, 2))),
        ((1, 1, 1),),
    )
    search = solset.construct(board, values, name="SearchSpace")

    def unique_over(grouping: str) -> GammaAtom:
        return GammaAtom(
            AggCall("bool_and", (Attr("ret"),)),
            GroupAgg(
                CandidateRef(),
                (grouping,),
                ((AggCall("alldifferent", (Attr("value"),)), "ret"),),
            ),
        )

    rows = solset.select(search, unique_over("row"), name="UniqueValuesInRows")
    effective = solset.select(rows, unique_over("col"), name="EffectiveSearchSpace")
    pinned = solset.select(
        effective,
        GammaAtom(AggCall("hassubset", (Rel("ReqValues"),)), CandidateRef()),
        name="LatinSquare",
    )
    catalog = {"Board": board, "Values": values, "ReqValues": req}
    return SimpleNamespace(
        board=board,
        values=values,
        req=req,
        search=search,
        rows=rows,
        effective=effective,
        pinned=pinned,
        catalog=catalog,
    )


def build_cakes(qty_hi: int = 100) -> SimpleNamespace:
    cakes = Relation(
        "Cakes",
        (("cake", VarcharDom()), ("price", IntDom())),
        (("Banana", 400), ("Chocolate", 450)),
    )
    recipes = Relation(
        "Recipes",
        (("cake", VarcharDom()), ("ingredient", VarcharDom()), ("amount", IntDom())),
        (
            ("Banana", "Banana", 2),
            ("Banana", "Sugar", 75),
            ("Banana", "Flour", 250),
            ("Banana", "Butter", 100),
            ("Chocolate", "Cocoa", 75),
            ("Chocolate", "Sugar", 150),
            ("Chocolate", "Flour", 200),
            ("Chocolate", "Butter", 150),
        ),
    )
    inventory = Relation(
        "Inventory",
        (("ingredient", VarcharDom()), ("avail", IntDom())),
        (("Banana", 6), ("Cocoa", 500), ("Flour", 4000), ("Butter", 500), ("Sugar", 2000)),
    )
    qty = cdr.construct("Qty", (("qty", IntRange(0, qty_hi)),))
    b = solset.construct(cakes, qty, name="B")
    makable = solset.select(
        b,
        GammaAtom(
            AggCall("bool_and", (Attr("ret"),)),
            GroupAgg(
                JoinRel(JoinRel(CandidateRef(), "Recipes"), "Inventory"),
                ("ingredient",),
                (
                    (
                        Cmp(
                            "<=",
                            AggCall("sum", (BinOp("*", Attr("qty"), Attr("amount")),)),
                            AggCall("min", (Attr("avail"),)),
                        ),
                        "ret",
                    ),
                ),
            ),
        ),
        name="MakableBatches",
    )
    objective = GammaAtom(
        AggCall("sum", (BinOp("*", Attr("qty"), Attr("price")),)),
        CandidateRef(),
        "profit",
    )
    best = solset.order_limit(
        solset.order_limit(makable, "DESC", objective), limit=1
    )
    catalog = {"Cakes": cakes, "Recipes": recipes, "Inventory": inventory}
    return SimpleNamespace(
        cakes=cakes,
        recipes=recipes,
        inventory=inventory,
        qty=qty,
        b=b,
        makable=makable,
        objective=objective,
        best=best,
        catalog=catalog,
    )


def build_meal() -> SimpleNamespace:
    meals = Relation("Meals", (("meal", IntDom()),), ((1,), (2,), (3,)))
    recipes = Relation(
        "Recipes",
        (
            ("recipe", IntDom()),
            ("satFat", FloatDom()),
            ("kCal", FloatDom()),
            ("gluten", BoolDom()),
        ),
        (
            (1, 7.1, 0.45, False),
            (2, 5.2, 0.55, False),
            (3, 1.0, 0.2, True),
            (4, 3.2, 0.25, False),
            (5, 6.5, 0.15, False),
            (6, 2.0, 1.2, False),
            (7, 4.0, 0.9, True),
        ),
    )
    gf = cdr.construct(
        "GFRecipes",
        (("recipe", RefDom((1, 2, 4, 5, 6), source="NonGluten", attr="recipe")),),
    )
    p = solset.construct(meals, gf, name="P")
    plans = solset.select(
        p,
        ChiAnd(
            (
                GammaAtom(
                    Between(AggCall("sum", (Attr("kCal"),)), Const(2.0), Const(2.5)),
                    JoinRel(CandidateRef(), "Recipes"),
                ),
                GammaAtom(AggCall("alldifferent", (Attr("recipe"),)), CandidateRef()),
            )
        ),
        name="Plans",
    )
    catalog = {"Meals": meals, "Recipes": recipes}
    return SimpleNamespace(
        meals=meals, recipes=recipes, gf=gf, p=p, plans=plans, catalog=catalog
    )


def build_energy() -> SimpleNamespace:
    flex = Relation(
        "FlexObjects",
        (("fid", IntDom()), ("tid", IntDom()), ("eL", FloatDom()), ("eH", FloatDom())),
        (
            (1, 1, 1.1, 3.4),
            (1, 2, -4.3, 1.2),
            (1, 3, 3.2, 4.7),
            (2, 2, 2.5, 5.1),
            (2, 3, -3.3, -1.0),
            (2, 4, 1.4, 2.2),
        ),
    )
    assigned = cdr.construct("AssignedEnergy", (("e", FloatDom()),))
    e = solset.construct(flex, assigned, name="E")
    feasible = solset.select(
        e,
        GammaAtom(
            AggCall("bool_and", (Between(Attr("e"), Attr("eL"), Attr("eH")),)),
            CandidateRef(),
        ),
        name="FeasibleE",
    )
    objective = GammaAtom(
        AggCall("sum", (Attr("t"),)),
        GroupAgg(
            CandidateRef(),
            ("tid",),
            ((Func("abs", (AggCall("sum", (Attr("e"),)),)), "t"),),
        ),
        "e",
    )
    best = solset.order_limit(solset.order_limit(feasible, "ASC", objective), limit=1)
    catalog = {"FlexObjects": flex}
    return SimpleNamespace(
        flex=flex,
        assigned=assigned,
        e=e,
        feasible=feasible,
        objective=objective,
        best=best,
        catalog=catalog,
    )


def build_threesat() -> cdr.CompleteRelation:
    # clauses nest left-associated, the way the surface parser builds them
    x1, x2, x3 = Attr("x1"), Attr("x2"), Attr("x3")

    def clause(a, b, c):
        return Or((Or((a, b)), c))

    chi = And(
        (
            clause(x1, x2, x3),
            clause(Not(x1), Not(x2), Not(x3)),
            clause(x1, Not(x2), x3),
        )
    )
    return cdr.construct(
        "ThreeSAT", (("x1", BoolDom()), ("x2", BoolDom()), ("x3", BoolDom())), chi
    )


def build_gst() -> SimpleNamespace:
    prices = Relation("Prices", (("price", FloatDom()),), ((110.0,), (55.0,)))
    schema3 = (("price", FloatDom()), ("gst", FloatDom()), ("exgst", FloatDom()))
    gst = cdr.construct(
        "GST",
        schema3,
        And(
            (
                Cmp("=", Attr("gst"), BinOp("/", Attr("price"), Const(11))),
                Cmp("=", Attr("exgst"), BinOp("-", Attr("price"), Attr("gst"))),
            )
        ),
    )
    price_gst = cdr.construct(
        "PriceGST",
        (("price", FloatDom()), ("gst", FloatDom())),
        Cmp("=", BinOp("/", Attr("price"), Const(11)), Attr("gst")),
    )
    price_exgst = cdr.construct(
        "PriceExGST",
        schema3,
        Cmp("=", Attr("exgst"), BinOp("-", Attr("price"), Attr("gst"))),
    )
    gst2 = cdr.natural_join(price_gst, price_exgst, name="GST2")
    return SimpleNamespace(
        prices=prices, gst=gst, price_gst=price_gst, price_exgst=price_exgst, gst2=gst2
    )


# --------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion at the end of a run

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome == "skipped"):
        _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    words = {"passed": "PASS", "skipped": "SKIP"}
    for nodeid in sorted(_ACCEPTANCE):
        word = words.get(_ACCEPTANCE[nodeid], "FAIL")
        terminalreporter.write_line(f"{word}  {nodeid.split('::')[-1]}")
