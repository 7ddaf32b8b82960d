"""Deterministic text renderings of answer relations.

Three formats, all byte-stable for golden-file comparison: a fixed-width
table with a header rule, RFC-style CSV, and a JSON array of objects.  Rows
come out in the relation's canonical order; the same relation always prints
to the same bytes.
"""

from __future__ import annotations

import csv
import io
import json

from .adr import Relation

FORMATS = ("table", "csv", "json")


def _cell_text(v: object) -> str:
    # bool before int: True is an int in disguise
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_table(rel: Relation) -> str:
    cells = [[_cell_text(v) for v in t] for t in rel.tuples]
    widths = [len(a) for a in rel.attrs]
    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))

    def line(row: list[str]) -> str:
        return " | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()

    out = [line(list(rel.attrs)), "-+-".join("-" * w for w in widths)]
    out.extend(line(row) for row in cells)
    return "\n".join(out) + "\n"


def format_csv(rel: Relation) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rel.attrs)
    for t in rel.tuples:
        w.writerow([_cell_text(v) for v in t])
    return buf.getvalue()


def format_json(rel: Relation) -> str:
    doc = [dict(zip(rel.attrs, t)) for t in rel.tuples]
    return json.dumps(doc, indent=2) + "\n"


def format_relation(rel: Relation, fmt: str = "table") -> str:
    if fmt == "table":
        return format_table(rel)
    if fmt == "csv":
        return format_csv(rel)
    if fmt == "json":
        return format_json(rel)
    raise ValueError(f"unknown format {fmt!r}")
