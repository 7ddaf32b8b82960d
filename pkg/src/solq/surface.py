"""Surface syntax: tokenizer, recursive-descent parser, and printer.

A program is a list of `name := expression` definitions plus load/run/emit
directives.  The printer produces the canonical spelling; parse(print(ast))
is structurally identical to ast (source positions are ignored by equality).

Statements are self-delimiting, so line breaks are insignificant; `--`
starts a comment running to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ParseError

KEYWORDS = frozenset(
    """omega omega_sol join join_sol cross cross_sol select select_sol
    project project_sol union union_sol diff diff_sol intersect
    intersect_sol rename rename_sol gamma tau lambda and or not true false
    between asc desc load from with run emit in int float bool
    varchar""".split()
)

_SOL_BINARY = {
    "join": "join",
    "cross": "cross",
    "union": "union",
    "diff": "diff",
    "intersect": "intersect",
}


# --------------------------------------------------------------------------
# AST


def _pos_field():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Node:
    pass


# domain specifications inside omega/load schemas


@dataclass(frozen=True)
class DPrim(Node):
    kind: str  # int | float | bool | varchar
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class DRange(Node):
    lo: int | float
    hi: int | float
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class DSet(Node):
    values: tuple
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class DColRef(Node):
    relation: str
    attr: str
    pos: tuple[int, int] | None = _pos_field()


# scalar expressions


@dataclass(frozen=True)
class SConst(Node):
    value: object
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class SName(Node):
    name: str
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class SUn(Node):
    op: str  # neg | not
    operand: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class SBin(Node):
    op: str  # + - * / and or
    left: Node
    right: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class SCmp(Node):
    op: str  # = != < <= > >=
    left: Node
    right: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class SBetween(Node):
    value: Node
    low: Node
    high: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class SCall(Node):
    """Aggregate or function call; `body` is the `: table` part if present."""

    name: str
    args: tuple[Node, ...]
    body: Node | None = None
    pos: tuple[int, int] | None = _pos_field()


# relational expressions


@dataclass(frozen=True)
class RName(Node):
    name: str
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class ROmega(Node):
    """ADR when `rows` is set, CDR when `chi` is set."""

    schema: tuple[tuple[str, Node], ...]
    rows: tuple[tuple, ...] | None = None
    chi: Node | None = None
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class ROmegaSol(Node):
    base: Node
    decision: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RBinary(Node):
    op: str  # join | cross | union | diff | intersect
    sol: bool
    left: Node
    right: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RSelect(Node):
    sol: bool
    predicate: Node
    arg: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RProject(Node):
    attrs: tuple[str, ...]
    arg: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RProjectSol(Node):
    rank: str | None
    attrs: tuple[str, ...] | None  # None means *
    arg: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RRename(Node):
    sol: bool
    pairs: tuple[tuple[str, str], ...]
    arg: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RGamma(Node):
    grouping: tuple[str, ...]
    specs: tuple[tuple[Node, str], ...]
    arg: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RTau(Node):
    direction: str  # ASC | DESC
    spec: Node
    result: str | None
    arg: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class RLimit(Node):
    limit: int
    arg: Node
    pos: tuple[int, int] | None = _pos_field()


# statements


@dataclass(frozen=True)
class Definition(Node):
    name: str
    expr: Node
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class Load(Node):
    name: str
    path: str
    schema: tuple[tuple[str, Node], ...]
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class Run(Node):
    name: str
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class Emit(Node):
    name: str
    pos: tuple[int, int] | None = _pos_field()


@dataclass(frozen=True)
class Program(Node):
    statements: tuple[Node, ...]
    pos: tuple[int, int] | None = _pos_field()


# --------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class Token:
    kind: str  # NAME KEYWORD NUMBER STRING OP EOF
    text: str
    value: object
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>--[^\n]*)
  | (?P<number>\d+\.\d+(?:[eE][+-]?\d+)?|\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:[^']|'')*')
  | (?P<op>:=|->|\.\.|<=|>=|!=|[()\[\]{},:;=<>+\-*/.])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        col = m.start() - line_start + 1
        kind = m.lastgroup
        raw = m.group()
        if kind in ("ws", "comment"):
            line += raw.count("\n")
            if "\n" in raw:
                line_start = m.start() + raw.rindex("\n") + 1
        elif kind == "number":
            value: object = float(raw) if ("." in raw or "e" in raw or "E" in raw) else int(raw)
            tokens.append(Token("NUMBER", raw, value, line, col))
        elif kind == "name":
            if raw in KEYWORDS:
                tokens.append(Token("KEYWORD", raw, raw, line, col))
            else:
                tokens.append(Token("NAME", raw, raw, line, col))
        elif kind == "string":
            tokens.append(Token("STRING", raw, raw[1:-1].replace("''", "'"), line, col))
        else:
            tokens.append(Token("OP", raw, raw, line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", None, line, len(text) - line_start + 1))
    return tokens


# --------------------------------------------------------------------------
# parser

_AGG_NAMES = frozenset(
    ["sum", "min", "max", "count", "alldiff", "bool_and", "bool_or", "hassubset"]
)
_FUNC_NAMES = frozenset(["abs", "sqrt", "exp", "sin", "pow"])


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # token plumbing

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def _advance(self) -> Token:
        t = self.cur
        if t.kind != "EOF":
            self.i += 1
        return t

    def _fail(self, message: str, tok: Token | None = None):
        t = tok or self.cur
        raise ParseError(message, t.line, t.col)

    def _expect_op(self, text: str) -> Token:
        t = self.cur
        if t.kind != "OP" or t.text != text:
            self._fail(f"expected {text!r}, found {t.text or 'end of input'!r}")
        return self._advance()

    def _expect_kw(self, word: str) -> Token:
        t = self.cur
        if t.kind != "KEYWORD" or t.text != word:
            self._fail(f"expected {word!r}, found {t.text or 'end of input'!r}")
        return self._advance()

    def _expect_name(self, what: str = "name") -> Token:
        t = self.cur
        if t.kind != "NAME":
            self._fail(f"expected {what}, found {t.text or 'end of input'!r}")
        return self._advance()

    def _at_op(self, text: str) -> bool:
        return self.cur.kind == "OP" and self.cur.text == text

    def _at_kw(self, word: str) -> bool:
        return self.cur.kind == "KEYWORD" and self.cur.text == word

    def _eat_op(self, text: str) -> bool:
        if self._at_op(text):
            self._advance()
            return True
        return False

    def _eat_kw(self, word: str) -> bool:
        if self._at_kw(word):
            self._advance()
            return True
        return False

    # statements

    def program(self) -> Program:
        stmts: list[Node] = []
        while self.cur.kind != "EOF":
            if self._eat_op(";"):
                continue
            stmts.append(self.statement())
        return Program(tuple(stmts))

    def statement(self) -> Node:
        t = self.cur
        if self._eat_kw("load"):
            name = self._expect_name("relation name").text
            self._expect_kw("from")
            if self.cur.kind != "STRING":
                self._fail("expected a quoted path")
            path = self._advance().value
            self._expect_kw("with")
            self._expect_op("(")
            schema = self.schema()
            self._expect_op(")")
            return Load(name, path, schema, pos=(t.line, t.col))
        if self._eat_kw("run"):
            return Run(self._expect_name().text, pos=(t.line, t.col))
        if self._eat_kw("emit"):
            return Emit(self._expect_name().text, pos=(t.line, t.col))
        name = self._expect_name("statement").text
        self._expect_op(":=")
        return Definition(name, self.rexpr(), pos=(t.line, t.col))

    # schemas and domains

    def schema(self) -> tuple[tuple[str, Node], ...]:
        entries = [self._schema_entry()]
        while self._eat_op(","):
            entries.append(self._schema_entry())
        return tuple(entries)

    def _schema_entry(self) -> tuple[str, Node]:
        name = self._expect_name("attribute").text
        self._expect_op(":")
        return name, self.domain()

    def domain(self) -> Node:
        t = self.cur
        for kind in ("int", "float", "bool", "varchar"):
            if self._eat_kw(kind):
                return DPrim(kind, pos=(t.line, t.col))
        if self._at_op("{"):
            self._advance()
            values = [self._literal()]
            while self._eat_op(","):
                values.append(self._literal())
            self._expect_op("}")
            return DSet(tuple(values), pos=(t.line, t.col))
        if self.cur.kind == "NUMBER" or self._at_op("-"):
            lo = self._literal()
            self._expect_op("..")
            hi = self._literal()
            if not isinstance(lo, (int, float)) or not isinstance(hi, (int, float)):
                self._fail("range bounds must be numbers", t)
            return DRange(lo, hi, pos=(t.line, t.col))
        if self.cur.kind == "NAME":
            rel = self._advance().text
            self._expect_op(".")
            attr = self._expect_name("attribute").text
            return DColRef(rel, attr, pos=(t.line, t.col))
        self._fail("expected a domain")

    def _literal(self):
        t = self.cur
        if self._eat_op("-"):
            n = self.cur
            if n.kind != "NUMBER":
                self._fail("expected a number after '-'")
            self._advance()
            return -n.value
        if t.kind == "NUMBER" or t.kind == "STRING":
            return self._advance().value
        if self._eat_kw("true"):
            return True
        if self._eat_kw("false"):
            return False
        self._fail("expected a literal")

    # relational expressions

    def rexpr(self) -> Node:
        t = self.cur
        if t.kind == "NAME":
            self._advance()
            if self._at_op("("):
                self._fail(f"unknown operator {t.text!r}", t)
            return RName(t.text, pos=(t.line, t.col))
        if t.kind != "KEYWORD":
            self._fail(f"expected an expression, found {t.text or 'end of input'!r}")
        word = t.text
        if word == "omega":
            return self._omega()
        if word == "omega_sol":
            self._advance()
            self._expect_op("(")
            base = self.rexpr()
            self._expect_op(",")
            decision = self.rexpr()
            self._expect_op(")")
            return ROmegaSol(base, decision, pos=(t.line, t.col))
        root = word[:-4] if word.endswith("_sol") else word
        sol = word.endswith("_sol")
        if root in _SOL_BINARY:
            self._advance()
            self._expect_op("(")
            left = self.rexpr()
            self._expect_op(",")
            right = self.rexpr()
            self._expect_op(")")
            return RBinary(root, sol, left, right, pos=(t.line, t.col))
        if root == "select":
            self._advance()
            self._expect_op("[")
            pred = self.sexpr()
            self._expect_op("]")
            return RSelect(sol, pred, self._paren_rexpr(), pos=(t.line, t.col))
        if word == "project":
            self._advance()
            self._expect_op("[")
            attrs = self._attr_list()
            self._expect_op("]")
            return RProject(attrs, self._paren_rexpr(), pos=(t.line, t.col))
        if word == "project_sol":
            self._advance()
            self._expect_op("[")
            rank = None if self._at_op("]") else self._expect_name("rank attribute").text
            self._expect_op("]")
            self._expect_op("[")
            if self._eat_op("*"):
                attrs = None
            else:
                attrs = self._attr_list()
            self._expect_op("]")
            return RProjectSol(rank, attrs, self._paren_rexpr(), pos=(t.line, t.col))
        if root == "rename":
            self._advance()
            self._expect_op("[")
            pairs = [self._rename_pair()]
            while self._eat_op(","):
                pairs.append(self._rename_pair())
            self._expect_op("]")
            return RRename(sol, tuple(pairs), self._paren_rexpr(), pos=(t.line, t.col))
        if word == "gamma":
            self._advance()
            self._expect_op("[")
            grouping = () if self._at_op("]") else self._attr_list()
            self._expect_op("]")
            self._expect_op("[")
            specs = [self._spec_entry()]
            while self._eat_op(","):
                specs.append(self._spec_entry())
            self._expect_op("]")
            return RGamma(grouping, tuple(specs), self._paren_rexpr(), pos=(t.line, t.col))
        if word == "tau":
            self._advance()
            self._expect_op("[")
            if self._eat_kw("asc"):
                direction = "ASC"
            elif self._eat_kw("desc"):
                direction = "DESC"
            else:
                self._fail("expected 'asc' or 'desc'")
            self._expect_op("]")
            self._expect_op("[")
            spec = self.sexpr()
            result = None
            if self._eat_op("->"):
                result = self._expect_name("result name").text
            self._expect_op("]")
            return RTau(direction, spec, result, self._paren_rexpr(), pos=(t.line, t.col))
        if word == "lambda":
            self._advance()
            self._expect_op("[")
            n = self.cur
            if n.kind != "NUMBER" or not isinstance(n.value, int):
                self._fail("expected an integer limit")
            self._advance()
            self._expect_op("]")
            return RLimit(n.value, self._paren_rexpr(), pos=(t.line, t.col))
        self._fail(f"{word!r} cannot start an expression")

    def _omega(self) -> Node:
        t = self._advance()
        self._expect_op("[")
        schema = self.schema()
        self._expect_op("]")
        self._expect_op("(")
        if self._at_op("{"):
            rows = self._tuple_set()
            node = ROmega(schema, rows=rows, pos=(t.line, t.col))
        else:
            node = ROmega(schema, chi=self.sexpr(), pos=(t.line, t.col))
        self._expect_op(")")
        return node

    def _tuple_set(self) -> tuple[tuple, ...]:
        self._expect_op("{")
        rows = []
        if not self._at_op("}"):
            rows.append(self._row())
            while self._eat_op(","):
                rows.append(self._row())
        self._expect_op("}")
        return tuple(rows)

    def _row(self) -> tuple:
        self._expect_op("(")
        values = [self._literal()]
        while self._eat_op(","):
            values.append(self._literal())
        self._expect_op(")")
        return tuple(values)

    def _paren_rexpr(self) -> Node:
        self._expect_op("(")
        e = self.rexpr()
        self._expect_op(")")
        return e

    def _attr_list(self) -> tuple[str, ...]:
        attrs = [self._expect_name("attribute").text]
        while self._eat_op(","):
            attrs.append(self._expect_name("attribute").text)
        return tuple(attrs)

    def _rename_pair(self) -> tuple[str, str]:
        old = self._expect_name("attribute").text
        self._expect_op("->")
        return old, self._expect_name("attribute").text

    def _spec_entry(self) -> tuple[Node, str]:
        spec = self.sexpr()
        self._expect_op("->")
        return spec, self._expect_name("result name").text

    # scalar expressions

    def sexpr(self) -> Node:
        return self._or()

    def _or(self) -> Node:
        e = self._and()
        while self._at_kw("or"):
            t = self._advance()
            e = SBin("or", e, self._and(), pos=(t.line, t.col))
        return e

    def _and(self) -> Node:
        e = self._not()
        while self._at_kw("and"):
            t = self._advance()
            e = SBin("and", e, self._not(), pos=(t.line, t.col))
        return e

    def _not(self) -> Node:
        if self._at_kw("not"):
            t = self._advance()
            return SUn("not", self._not(), pos=(t.line, t.col))
        return self._cmp()

    def _cmp(self) -> Node:
        e = self._add()
        t = self.cur
        if t.kind == "OP" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            self._advance()
            return SCmp(t.text, e, self._add(), pos=(t.line, t.col))
        if self._at_kw("between"):
            self._advance()
            low = self._add()
            self._expect_kw("and")
            return SBetween(e, low, self._add(), pos=(t.line, t.col))
        return e

    def _add(self) -> Node:
        e = self._mul()
        while self.cur.kind == "OP" and self.cur.text in ("+", "-"):
            t = self._advance()
            e = SBin(t.text, e, self._mul(), pos=(t.line, t.col))
        return e

    def _mul(self) -> Node:
        e = self._unary()
        while self.cur.kind == "OP" and self.cur.text in ("*", "/"):
            t = self._advance()
            e = SBin(t.text, e, self._unary(), pos=(t.line, t.col))
        return e

    def _unary(self) -> Node:
        if self._at_op("-"):
            t = self._advance()
            return SUn("neg", self._unary(), pos=(t.line, t.col))
        return self._atom()

    def _atom(self) -> Node:
        t = self.cur
        if t.kind == "NUMBER" or t.kind == "STRING":
            self._advance()
            return SConst(t.value, pos=(t.line, t.col))
        if self._eat_kw("true"):
            return SConst(True, pos=(t.line, t.col))
        if self._eat_kw("false"):
            return SConst(False, pos=(t.line, t.col))
        if self._eat_op("("):
            e = self.sexpr()
            self._expect_op(")")
            return e
        if t.kind == "NAME":
            self._advance()
            if self._at_op("("):
                return self._call(t)
            return SName(t.text, pos=(t.line, t.col))
        self._fail(f"expected a value, found {t.text or 'end of input'!r}")

    def _call(self, name_tok: Token) -> Node:
        self._expect_op("(")
        args: list[Node] = []
        body = None
        if not self._at_op(")"):
            if not self._at_op(":"):
                args.append(self.sexpr())
                while self._eat_op(","):
                    args.append(self.sexpr())
            if self._eat_op(":"):
                body = self.rexpr()
        self._expect_op(")")
        return SCall(name_tok.text, tuple(args), body, pos=(name_tok.line, name_tok.col))


def parse_program(text: str) -> Program:
    return _Parser(tokenize(text)).program()


# --------------------------------------------------------------------------
# printer

_PREC = {"or": 1, "and": 2, "not": 3, "cmp": 4, "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7}


def _fmt_literal(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    return repr(v)


def _fmt_domain(d: Node) -> str:
    if isinstance(d, DPrim):
        return d.kind
    if isinstance(d, DRange):
        return f"{_fmt_literal(d.lo)}..{_fmt_literal(d.hi)}"
    if isinstance(d, DSet):
        return "{" + ", ".join(_fmt_literal(v) for v in d.values) + "}"
    if isinstance(d, DColRef):
        return f"{d.relation}.{d.attr}"
    raise ValueError(f"not a domain node: {d!r}")


def _fmt_schema(schema) -> str:
    return ", ".join(f"{a}: {_fmt_domain(d)}" for a, d in schema)


def _fmt_sexpr(e: Node, min_prec: int = 1) -> str:
    text, prec = _render_sexpr(e)
    return f"({text})" if prec < min_prec else text


def _render_sexpr(e: Node) -> tuple[str, int]:
    if isinstance(e, SConst):
        return _fmt_literal(e.value), 9
    if isinstance(e, SName):
        return e.name, 9
    if isinstance(e, SUn):
        if e.op == "neg":
            return f"-{_fmt_sexpr(e.operand, 8)}", 7
        return f"not {_fmt_sexpr(e.operand, 4)}", 3
    if isinstance(e, SBin):
        p = _PREC[e.op]
        return f"{_fmt_sexpr(e.left, p)} {e.op} {_fmt_sexpr(e.right, p + 1)}", p
    if isinstance(e, SCmp):
        return f"{_fmt_sexpr(e.left, 5)} {e.op} {_fmt_sexpr(e.right, 5)}", 4
    if isinstance(e, SBetween):
        parts = (_fmt_sexpr(e.value, 5), _fmt_sexpr(e.low, 5), _fmt_sexpr(e.high, 5))
        return f"{parts[0]} between {parts[1]} and {parts[2]}", 4
    if isinstance(e, SCall):
        inner = ", ".join(_fmt_sexpr(a) for a in e.args)
        if e.body is not None:
            sep = " : " if inner else ": "
            inner = f"{inner}{sep}{print_rexpr(e.body)}"
        return f"{e.name}({inner})", 9
    raise ValueError(f"not a scalar node: {e!r}")


def print_rexpr(e: Node) -> str:
    if isinstance(e, RName):
        return e.name
    if isinstance(e, ROmega):
        if e.rows is not None:
            body = "{" + ", ".join(
                "(" + ", ".join(_fmt_literal(v) for v in row) + ")" for row in e.rows
            ) + "}"
        else:
            body = _fmt_sexpr(e.chi)
        return f"omega[{_fmt_schema(e.schema)}]({body})"
    if isinstance(e, ROmegaSol):
        return f"omega_sol({print_rexpr(e.base)}, {print_rexpr(e.decision)})"
    if isinstance(e, RBinary):
        op = e.op + ("_sol" if e.sol else "")
        return f"{op}({print_rexpr(e.left)}, {print_rexpr(e.right)})"
    if isinstance(e, RSelect):
        op = "select_sol" if e.sol else "select"
        return f"{op}[{_fmt_sexpr(e.predicate)}]({print_rexpr(e.arg)})"
    if isinstance(e, RProject):
        return f"project[{', '.join(e.attrs)}]({print_rexpr(e.arg)})"
    if isinstance(e, RProjectSol):
        rank = e.rank or ""
        attrs = "*" if e.attrs is None else ", ".join(e.attrs)
        return f"project_sol[{rank}][{attrs}]({print_rexpr(e.arg)})"
    if isinstance(e, RRename):
        op = "rename_sol" if e.sol else "rename"
        pairs = ", ".join(f"{a} -> {b}" for a, b in e.pairs)
        return f"{op}[{pairs}]({print_rexpr(e.arg)})"
    if isinstance(e, RGamma):
        specs = ", ".join(f"{_fmt_sexpr(s)} -> {n}" for s, n in e.specs)
        return f"gamma[{', '.join(e.grouping)}][{specs}]({print_rexpr(e.arg)})"
    if isinstance(e, RTau):
        arrow = f" -> {e.result}" if e.result else ""
        return (
            f"tau[{e.direction.lower()}][{_fmt_sexpr(e.spec)}{arrow}]"
            f"({print_rexpr(e.arg)})"
        )
    if isinstance(e, RLimit):
        return f"lambda[{e.limit}]({print_rexpr(e.arg)})"
    raise ValueError(f"not a relational node: {e!r}")


def print_statement(s: Node) -> str:
    if isinstance(s, Definition):
        return f"{s.name} := {print_rexpr(s.expr)}"
    if isinstance(s, Load):
        return f"load {s.name} from {_fmt_literal(s.path)} with ({_fmt_schema(s.schema)})"
    if isinstance(s, Run):
        return f"run {s.name}"
    if isinstance(s, Emit):
        return f"emit {s.name}"
    raise ValueError(f"not a statement: {s!r}")


def print_program(p: Program) -> str:
    return "\n".join(print_statement(s) for s in p.statements) + "\n"
