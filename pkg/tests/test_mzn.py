"""MiniZinc emission and the external-solver round trip."""

import json
import os
import stat

import pytest

from conftest import (
    GOLDEN,
    build_cakes,
    build_energy,
    build_latin,
    build_meal,
    build_threesat,
)
from solq import mzn, solset, translate
from solq.adr import IntRange, Relation, VarcharDom
from solq.cdr import CompleteRelation
from solq.errors import EmitError, EvalError, SolverError
from solq.evaluate import QueryClass, classify_query
from solq.expr import Attr, Cmp, Const, SymLookup
from solq.mzn import (
    MznModel,
    _adapt_output,
    _mangle,
    emit_minizinc,
    find_solver,
    parse_solver_result,
    solve_with_minizinc,
)
from solq.translate import FlatForm, SymTable


def _golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


def test_pinned_board_model_matches_golden():
    latin = build_latin()
    ff = translate.translate_query(latin.pinned, latin.catalog)
    assert emit_minizinc(ff, latin.catalog).source == _golden("latin.mzn")


def test_optimizing_model_matches_golden():
    cakes = build_cakes()
    ff = translate.translate_query(cakes.best, cakes.catalog)
    assert emit_minizinc(ff, cakes.catalog).source == _golden("cakes.mzn")


def test_lookup_array_model_matches_golden():
    meal = build_meal()
    ff = translate.translate_query(meal.plans, meal.catalog)
    assert emit_minizinc(ff, meal.catalog).source == _golden("meal.mzn")


def test_continuous_model_matches_golden():
    energy = build_energy()
    ff = translate.translate_query(energy.best, energy.catalog)
    assert emit_minizinc(ff, energy.catalog).source == _golden("energy.mzn")


def test_boolean_model_matches_golden():
    u = solset.construct(None, build_threesat())
    ff = translate.translate_query(u, {})
    assert emit_minizinc(ff, {}).source == _golden("threesat.mzn")


def test_emission_is_deterministic():
    meal = build_meal()
    ff = translate.translate_query(meal.plans, meal.catalog)
    a = emit_minizinc(ff, meal.catalog)
    b = emit_minizinc(ff, meal.catalog)
    assert a.source == b.source
    assert a.var_names == b.var_names == {
        "recipe1": "recipe1",
        "recipe2": "recipe2",
        "recipe3": "recipe3",
    }


def test_identifier_mangling():
    taken: set[str] = set()
    assert _mangle("kCal", taken) == "kcal"
    assert _mangle("kCal", taken) == "kcal_2"  # collision numbering
    assert _mangle("int", taken) == "int_v"  # reserved word
    assert _mangle("2fast", taken) == "v_2fast"  # leading non-letter
    assert _mangle("a-b c", taken) == "a_b_c"


def test_var_names_must_be_bijective():
    with pytest.raises(EmitError, match="bijective"):
        MznModel("", {"a": "x", "b": "x"})


def _bare_form(schema, chi=Const(True), **kw) -> FlatForm:
    return FlatForm(
        CompleteRelation(None, schema, chi),
        Relation(None, (), ((),)),
        SymTable((), ()),
        (),
        **kw,
    )


def test_string_variables_are_not_emittable():
    ff = _bare_form((("who", VarcharDom()),))
    with pytest.raises(EmitError, match="not emittable"):
        emit_minizinc(ff)


def test_nan_constants_are_not_emittable():
    ff = _bare_form(
        (("x", IntRange(0, 1)),), Cmp("<", Const(float("nan")), Attr("x"))
    )
    with pytest.raises(EmitError, match="not emittable"):
        emit_minizinc(ff)


def _lookup_form(rel: Relation) -> FlatForm:
    chi = Cmp(
        "<",
        Const(SymLookup("w", rel.name, (("k", Attr("x")),))),
        Const(10),
    )
    return _bare_form((("x", IntRange(1, 2)),), chi)


def test_lookup_keys_must_be_contiguous_integers():
    gappy = Relation(
        "T", (("k", IntRange(1, 3)), ("w", IntRange(0, 9))), ((1, 4), (3, 5))
    )
    with pytest.raises(EmitError, match="contiguous"):
        emit_minizinc(_lookup_form(gappy), {"T": gappy})
    wordy = Relation(
        "T", (("k", VarcharDom()), ("w", IntRange(0, 9))), (("a", 4),)
    )
    with pytest.raises(EmitError, match="integers"):
        emit_minizinc(_lookup_form(wordy), {"T": wordy})


def test_multi_key_lookups_are_rejected():
    rel = Relation(
        "T",
        (("k", IntRange(1, 2)), ("j", IntRange(1, 2)), ("w", IntRange(0, 9))),
        ((1, 1, 4),),
    )
    chi = Cmp(
        "<",
        Const(SymLookup("w", "T", (("k", Attr("x")), ("j", Attr("x"))))),
        Const(10),
    )
    with pytest.raises(EmitError, match="single-key"):
        emit_minizinc(_bare_form((("x", IntRange(1, 2)),), chi), {"T": rel})


def test_parse_solver_result_round_trip():
    doc = json.dumps(
        {"candidates": [{"v1": 1, "v2": 2}], "status": "SATISFIED"}
    )
    out = parse_solver_result(doc, {"value1": "v1", "value2": "v2"})
    assert out.status == "SATISFIED"
    assert out.candidates == ({"value1": 1, "value2": 2},)
    bare = parse_solver_result(doc)
    assert bare.candidates == ({"v1": 1, "v2": 2},)


def test_parse_solver_result_rejections():
    with pytest.raises(EvalError, match="malformed"):
        parse_solver_result("nonsense{")
    with pytest.raises(EvalError, match="candidates"):
        parse_solver_result(json.dumps({"status": "SATISFIED"}))
    with pytest.raises(EvalError, match="status"):
        parse_solver_result(json.dumps({"candidates": [], "status": "MAYBE"}))
    with pytest.raises(EvalError, match="list of objects"):
        parse_solver_result(json.dumps({"candidates": [3], "status": "SATISFIED"}))
    with pytest.raises(EvalError, match="misses"):
        parse_solver_result(
            json.dumps({"candidates": [{"v1": 1}], "status": "SATISFIED"}),
            {"value1": "v1", "value2": "v2"},
        )


def test_adapt_output_separators_and_comments():
    raw = '% seed 1\n{"x": 1}\n----------\n{"x": 2}\n----------\n==========\n'
    doc = json.loads(_adapt_output(raw, QueryClass("satisfaction_all"), {}))
    assert doc == {"candidates": [{"x": 1}, {"x": 2}], "status": "SATISFIED"}


def test_adapt_output_unsatisfiable_marker():
    raw = "=====UNSATISFIABLE=====\n"
    doc = json.loads(_adapt_output(raw, QueryClass("satisfaction_all"), {}))
    assert doc == {"candidates": [], "status": "UNSATISFIABLE"}


def test_adapt_output_optimization_takes_the_last_improvement():
    raw = '{"x": 5}\n----------\n{"x": 9}\n----------\n==========\n'
    qc = QueryClass("optimization", direction="DESC", objective=Attr("x"))
    doc = json.loads(_adapt_output(raw, qc, {}))
    assert doc == {"candidates": [{"x": 9}], "status": "OPTIMAL"}


def test_adapt_output_detects_truncated_listings():
    raw = '{"x": 1}\n----------\n{"x": 2}\n----------\n{"x": 3}\n----------\n'
    qc = QueryClass("satisfaction_limited", limit=2)
    doc = json.loads(_adapt_output(raw, qc, {}))
    assert doc == {"candidates": [{"x": 1}, {"x": 2}], "status": "LIMIT_REACHED"}
    short = '{"x": 1}\n----------\n==========\n'
    doc2 = json.loads(_adapt_output(short, qc, {}))
    assert doc2 == {"candidates": [{"x": 1}], "status": "SATISFIED"}


def test_find_solver_paths(tmp_path, monkeypatch):
    monkeypatch.setenv("PATH", str(tmp_path))
    monkeypatch.delenv("SOLQ_SOLVER", raising=False)
    assert find_solver() is None
    fake = tmp_path / "mzn"
    fake.write_text("#!/bin/sh\n")
    fake.chmod(fake.stat().st_mode | stat.S_IXUSR)
    assert find_solver(str(fake)) == str(fake)
    monkeypatch.setenv("SOLQ_SOLVER", str(fake))
    assert find_solver() == str(fake)
    with pytest.raises(SolverError, match="not found"):
        find_solver(str(tmp_path / "absent"))


def _fake_solver(tmp_path, body: str):
    script = tmp_path / "fake-mzn"
    script.write_text("#!/bin/sh\n" + body)
    script.chmod(script.stat().st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return str(script)


def test_solver_round_trip_through_a_stub(tmp_path):
    latin = build_latin()
    ff = translate.translate_query(latin.pinned, latin.catalog)
    qc = classify_query(ff)
    answer = '{"value1": 1, "value2": 2, "value3": 2, "value4": 1}'
    exe = _fake_solver(
        tmp_path,
        f"cat <<'EOF'\n{answer}\n----------\n==========\nEOF\n",
    )
    out = solve_with_minizinc(ff, qc, latin.catalog, solver_path=exe)
    assert out.status == "SATISFIED"
    assert out.candidates == (
        {"value1": 1, "value2": 2, "value3": 2, "value4": 1},
    )


def test_solver_failures_surface_the_stderr(tmp_path, monkeypatch):
    latin = build_latin()
    ff = translate.translate_query(latin.pinned, latin.catalog)
    qc = classify_query(ff)
    exe = _fake_solver(tmp_path, "echo 'model badness' >&2\nexit 7\n")
    with pytest.raises(SolverError, match="model badness"):
        solve_with_minizinc(ff, qc, latin.catalog, solver_path=exe)
    monkeypatch.setenv("PATH", str(tmp_path))
    monkeypatch.delenv("SOLQ_SOLVER", raising=False)
    with pytest.raises(SolverError, match="no MiniZinc"):
        solve_with_minizinc(ff, qc, latin.catalog)
