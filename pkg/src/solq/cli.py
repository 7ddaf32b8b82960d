"""Command-line driver: parse, elaborate, evaluate, print.

One pipeline per invocation.  `run` sinks evaluate on the selected backend
and print in the selected format; `emit` sinks always print model text.
Exit status: 0 success, 1 user error (syntax, elaboration, missing file),
2 evaluation failure (enumeration, translation, solver).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import cdr, elaborate, evaluate, mzn, printing, solset, surface, translate
from .adr import Relation
from .cdr import CompleteRelation
from .elaborate import ProjectedQuery, Sink
from .errors import ElaborationError, ParseError, SolqError


@dataclass(frozen=True)
class RunConfig:
    path: Path
    backend: str = "brute"  # brute | mzn-emit | mzn-solve
    fmt: str = "table"
    output: Path | None = None
    cap: int = 10**7
    jobs: int = 1
    solver_path: str | None = None


def _model_text(value: object, catalog: dict[str, object], cap: int) -> str:
    if isinstance(value, ProjectedQuery):
        value = value.query
    ff = translate.translate_query(value, catalog, cap)
    return mzn.emit_minizinc(ff, catalog=catalog, cap=cap).source


def _run_sink(sink: Sink, catalog: dict[str, object], config: RunConfig) -> str:
    v = sink.value
    if isinstance(v, Relation):
        return printing.format_relation(v, config.fmt)
    if isinstance(v, CompleteRelation):
        if config.backend == "brute":
            rel = cdr.project_eval(v, v.attrs, cap=config.cap, name=sink.name)
            return printing.format_relation(rel, config.fmt)
        # a bare complete relation is the one-candidate-per-tuple query
        v = ProjectedQuery(solset.construct(None, v), None, v.attrs, sink.name)
    if config.backend == "mzn-emit":
        return _model_text(v, catalog, config.cap)
    rel = evaluate.run_projection(
        v.query,
        v.rank,
        v.attrs,
        catalog,
        cap=config.cap,
        backend=config.backend,
        name=sink.name,
        solver_path=config.solver_path,
        jobs=config.jobs,
    )
    return printing.format_relation(rel, config.fmt)


def run(config: RunConfig) -> str:
    """Execute one program and return everything it prints."""
    text = config.path.read_text(encoding="utf-8")
    prog = surface.parse_program(text)
    pipe = elaborate.elaborate(prog, base_dir=config.path.parent, cap=config.cap)
    tables = pipe.catalog.tables()
    blocks = []
    for sink in pipe.sinks:
        if sink.kind == "emit":
            blocks.append(_model_text(sink.value, tables, config.cap))
        else:
            blocks.append(_run_sink(sink, tables, config))
    return "\n".join(blocks)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solq", description="relational constraint queries")
    sub = p.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="parse, evaluate and print a program")
    runp.add_argument("file", help="program file (.ra)")
    runp.add_argument(
        "--backend", choices=("brute", "mzn-emit", "mzn-solve"), default="brute"
    )
    runp.add_argument("--output", "-o", help="write to this file instead of stdout")
    runp.add_argument("--format", choices=printing.FORMATS, default="table")
    runp.add_argument("--cap", type=int, default=10**7, help="enumeration cap")
    runp.add_argument("--jobs", type=int, default=1, help="parallel scan workers")
    runp.add_argument("--solver-path", help="minizinc executable (or set SOLQ_SOLVER)")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    config = RunConfig(
        path=Path(args.file),
        backend=args.backend,
        fmt=args.format,
        output=Path(args.output) if args.output else None,
        cap=args.cap,
        jobs=args.jobs,
        solver_path=args.solver_path,
    )
    try:
        out = run(config)
    except (ParseError, ElaborationError) as exc:
        print(f"{config.path}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SolqError as exc:
        print(f"{config.path}: {exc}", file=sys.stderr)
        return 2
    if config.output is not None:
        config.output.write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
