"""Concrete syntax: programs (`.while`), label files (`.labels`), lattice files (`.lat`).

Program grammar
    program  ::= { "init" IDENT "=" INT ";" } { stmt }
    stmt     ::= "skip" ";" | IDENT ":=" expr ";" | "[" IDENT ":=" expr "]" ";"
               | "if" "(" expr ")" block [ "else" block ]
               | "while" "(" expr ")" block
    block    ::= "{" { stmt } "}"
    expr     ::= precedence climbing: "||" < "&&" < comparisons < "+ -" < "* %" < unary "-"

Label-file grammar
    clause   ::= "lattice" STRING ";" | "label" NAME ":" label ";" | "default" ":" label ";"
    label    ::= meet { "\\/" meet }        meet ::= atom { "/\\" atom }
    atom     ::= LEVEL | "(" expr "?" label ":" label ")"

Lattice-file grammar
    file     ::= "levels" ":" IDENT+ ";" [ "order" ":" { IDENT "<" IDENT ";" } ]

Line comments start with ``#``.  Lines starting with ``#active`` in program
files are not comments but final-active-set headers written by the
transformer; they are parsed back into the program's ``active`` map.
Variable names may carry a single ``@k`` copy suffix (the transformer's
naming scheme); any other use of ``@`` is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ConfigError, ParseError
from .labels import Cond, Join, Label, Level, Meet
from .lang import BinOp, Cmd, Expr, If, Lit, Seq, Skip, Var, While, Assign, BracketAssign
from .lattice import Lattice
from .transform import base_of

_SYMBOLS = [
    ":=", "==", "!=", "<=", ">=", "&&", "||", "\\/", "/\\",
    ";", "(", ")", "{", "}", "[", "]", "<", ">", "+", "-", "*", "%",
    "?", ":", "=", ",",
]

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*(@[0-9]+)?")
_ACTIVE_RE = re.compile(r"\A#active\s+([A-Za-z_][A-Za-z_0-9]*)\s*=\s*([A-Za-z_@0-9]+)\s*\Z")


@dataclass
class Token:
    kind: str  # "ident" | "int" | "string" | "sym" | "eof"
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated string", line, col)
            toks.append(Token("string", text[i + 1:j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT_RE.match(text, i)
            assert m is not None
            j = m.end()
            if j < n and text[j] == "@":
                raise ParseError("'@' is reserved for transformer-generated copy names",
                                 line, col)
            toks.append(Token("ident", m.group(0), line, col))
            col += j - i
            i = j
            continue
        if ch == "@":
            raise ParseError("'@' is reserved for transformer-generated copy names", line, col)
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class _Cursor:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_sym(self, *vals: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.value in vals

    def at_word(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.value == word

    def expect_sym(self, val: str) -> Token:
        t = self.next()
        if t.kind != "sym" or t.value != val:
            raise ParseError(f"expected '{val}', found '{t.value or t.kind}'", t.line, t.col)
        return t

    def expect_ident(self) -> Token:
        t = self.next()
        if t.kind != "ident":
            raise ParseError(f"expected identifier, found '{t.value or t.kind}'", t.line, t.col)
        return t

    def expect_word(self, word: str) -> None:
        t = self.next()
        if t.kind != "ident" or t.value != word:
            raise ParseError(f"expected '{word}', found '{t.value or t.kind}'", t.line, t.col)


# ---------------------------------------------------------------------------
# Programs


@dataclass
class ParsedProgram:
    cmd: Cmd
    init: dict[str, int] = field(default_factory=dict)
    active: dict[str, str] | None = None


_STMT_KEYWORDS = {"skip", "if", "else", "while", "init"}


def parse_program(text: str) -> ParsedProgram:
    active: dict[str, str] = {}
    body_lines = []
    for raw in text.splitlines():
        stripped = raw.strip()
        if stripped.startswith("#active"):
            m = _ACTIVE_RE.match(stripped)
            if m is None:
                raise ParseError(f"malformed #active header: {stripped!r}")
            active[m.group(1)] = m.group(2)
            body_lines.append("")
        else:
            body_lines.append(raw)
    cur = _Cursor(_tokenize("\n".join(body_lines)))

    init: dict[str, int] = {}
    while cur.at_word("init"):
        cur.next()
        name = cur.expect_ident()
        _check_var_name(name)
        cur.expect_sym("=")
        neg = False
        if cur.at_sym("-"):
            cur.next()
            neg = True
        t = cur.next()
        if t.kind != "int":
            raise ParseError("expected integer in init declaration", t.line, t.col)
        cur.expect_sym(";")
        init[name.value] = -int(t.value) if neg else int(t.value)

    stmts = []
    while cur.peek().kind != "eof":
        stmts.append(_parse_stmt(cur))
    cmd = _fold_seq(stmts)
    cmd = _number_sites(cmd)
    return ParsedProgram(cmd, init, active or None)


def _check_var_name(tok: Token) -> None:
    if tok.value in _STMT_KEYWORDS:
        raise ParseError(f"'{tok.value}' is a keyword", tok.line, tok.col)


def _fold_seq(stmts: list[Cmd]) -> Cmd:
    if not stmts:
        return Skip()
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


def _number_sites(cmd: Cmd) -> Cmd:
    from .lang import renumber_sites

    return renumber_sites(cmd)


def _parse_stmt(cur: _Cursor) -> Cmd:
    if cur.at_word("skip"):
        cur.next()
        cur.expect_sym(";")
        return Skip()
    if cur.at_word("if"):
        cur.next()
        cur.expect_sym("(")
        guard = _parse_expr(cur)
        cur.expect_sym(")")
        then_branch = _parse_block(cur)
        else_branch: Cmd = Skip()
        if cur.at_word("else"):
            cur.next()
            else_branch = _parse_block(cur)
        return If(guard, then_branch, else_branch)
    if cur.at_word("while"):
        cur.next()
        cur.expect_sym("(")
        guard = _parse_expr(cur)
        cur.expect_sym(")")
        body = _parse_block(cur)
        return While(guard, body)
    if cur.at_sym("["):
        cur.next()
        target = cur.expect_ident()
        _check_var_name(target)
        cur.expect_sym(":=")
        rhs = _parse_expr(cur)
        cur.expect_sym("]")
        cur.expect_sym(";")
        return BracketAssign(None, target.value, rhs)
    target = cur.expect_ident()
    _check_var_name(target)
    cur.expect_sym(":=")
    rhs = _parse_expr(cur)
    cur.expect_sym(";")
    return Assign(None, target.value, rhs)


def _parse_block(cur: _Cursor) -> Cmd:
    cur.expect_sym("{")
    stmts = []
    while not cur.at_sym("}"):
        if cur.peek().kind == "eof":
            t = cur.peek()
            raise ParseError("unterminated block", t.line, t.col)
        stmts.append(_parse_stmt(cur))
    cur.expect_sym("}")
    return _fold_seq(stmts)


_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


def _parse_expr(cur: _Cursor) -> Expr:
    return _parse_or(cur)


def _parse_or(cur: _Cursor) -> Expr:
    e = _parse_and(cur)
    while cur.at_sym("||"):
        cur.next()
        e = BinOp("||", e, _parse_and(cur))
    return e


def _parse_and(cur: _Cursor) -> Expr:
    e = _parse_cmp(cur)
    while cur.at_sym("&&"):
        cur.next()
        e = BinOp("&&", e, _parse_cmp(cur))
    return e


def _parse_cmp(cur: _Cursor) -> Expr:
    e = _parse_add(cur)
    while cur.at_sym(*_CMP_OPS):
        op = cur.next().value
        e = BinOp(op, e, _parse_add(cur))
    return e


def _parse_add(cur: _Cursor) -> Expr:
    e = _parse_mul(cur)
    while cur.at_sym("+", "-"):
        op = cur.next().value
        e = BinOp(op, e, _parse_mul(cur))
    return e


def _parse_mul(cur: _Cursor) -> Expr:
    e = _parse_unary(cur)
    while cur.at_sym("*", "%"):
        op = cur.next().value
        e = BinOp(op, e, _parse_unary(cur))
    return e


def _parse_unary(cur: _Cursor) -> Expr:
    if cur.at_sym("-"):
        cur.next()
        operand = _parse_unary(cur)
        if isinstance(operand, Lit):
            return Lit(-operand.value)
        return BinOp("-", Lit(0), operand)
    return _parse_atom(cur)


def _parse_atom(cur: _Cursor) -> Expr:
    t = cur.peek()
    if t.kind == "int":
        cur.next()
        return Lit(int(t.value))
    if t.kind == "ident":
        if t.value in _STMT_KEYWORDS:
            raise ParseError(f"'{t.value}' is a keyword", t.line, t.col)
        cur.next()
        return Var(t.value)
    if cur.at_sym("("):
        cur.next()
        e = _parse_expr(cur)
        cur.expect_sym(")")
        return e
    raise ParseError(f"expected expression, found '{t.value or t.kind}'", t.line, t.col)


# ---------------------------------------------------------------------------
# Label files


@dataclass
class LabelFile:
    """Parsed label annotations: exact-name rules plus an optional default."""

    entries: dict[str, Label] = field(default_factory=dict)
    default: Label | None = None
    lattice_path: str | None = None

    def resolve(self, variables: frozenset[str] | set[str]) -> dict[str, Label]:
        """Label for every variable: copy-specific > base-name > default."""
        out: dict[str, Label] = {}
        missing = []
        for v in sorted(variables):
            if v in self.entries:
                out[v] = self.entries[v]
            elif base_of(v) in self.entries:
                out[v] = self.entries[base_of(v)]
            elif self.default is not None:
                out[v] = self.default
            else:
                missing.append(v)
        if missing:
            raise ConfigError(
                "no label for variable(s) " + ", ".join(missing) + " and no default rule"
            )
        return out


def scan_lattice_ref(text: str) -> str | None:
    """Path named by a ``lattice "..."`` clause, if the label file has one."""
    cur = _Cursor(_tokenize(text))
    while cur.peek().kind != "eof":
        if cur.at_word("lattice"):
            cur.next()
            t = cur.next()
            if t.kind != "string":
                raise ParseError("expected quoted path after 'lattice'", t.line, t.col)
            return t.value
        cur.next()
    return None


def parse_labels(text: str, lattice: Lattice) -> LabelFile:
    cur = _Cursor(_tokenize(text))
    out = LabelFile()
    while cur.peek().kind != "eof":
        if cur.at_word("lattice"):
            cur.next()
            t = cur.next()
            if t.kind != "string":
                raise ParseError("expected quoted path after 'lattice'", t.line, t.col)
            out.lattice_path = t.value
            cur.expect_sym(";")
        elif cur.at_word("label"):
            cur.next()
            name = cur.expect_ident()
            cur.expect_sym(":")
            lbl = _parse_label(cur, lattice)
            cur.expect_sym(";")
            if name.value in out.entries:
                raise ParseError(f"duplicate label rule for '{name.value}'",
                                 name.line, name.col)
            out.entries[name.value] = lbl
        elif cur.at_word("default"):
            cur.next()
            cur.expect_sym(":")
            lbl = _parse_label(cur, lattice)
            cur.expect_sym(";")
            if out.default is not None:
                raise ParseError("duplicate default rule")
            out.default = lbl
        else:
            t = cur.peek()
            raise ParseError(f"expected 'label', 'default' or 'lattice', found '{t.value}'",
                             t.line, t.col)
    return out


def _parse_label(cur: _Cursor, lattice: Lattice) -> Label:
    e = _parse_label_meet(cur, lattice)
    while cur.at_sym("\\/"):
        cur.next()
        e = Join(e, _parse_label_meet(cur, lattice))
    return e


def _parse_label_meet(cur: _Cursor, lattice: Lattice) -> Label:
    e = _parse_label_atom(cur, lattice)
    while cur.at_sym("/\\"):
        cur.next()
        e = Meet(e, _parse_label_atom(cur, lattice))
    return e


def _parse_label_atom(cur: _Cursor, lattice: Lattice) -> Label:
    t = cur.peek()
    if t.kind == "ident":
        cur.next()
        if t.value not in lattice:
            raise ConfigError(f"unknown level '{t.value}' (lattice has {' '.join(lattice.elements)})")
        return Level(t.value)
    if cur.at_sym("("):
        cur.next()
        guard = _parse_expr(cur)
        cur.expect_sym("?")
        if_true = _parse_label(cur, lattice)
        cur.expect_sym(":")
        if_false = _parse_label(cur, lattice)
        cur.expect_sym(")")
        return Cond(guard, if_true, if_false)
    raise ParseError(f"expected label, found '{t.value or t.kind}'", t.line, t.col)


# ---------------------------------------------------------------------------
# Lattice files


def parse_lattice(text: str) -> Lattice:
    cur = _Cursor(_tokenize(text))
    cur.expect_word("levels")
    cur.expect_sym(":")
    elements: list[str] = []
    while cur.peek().kind == "ident":
        elements.append(cur.next().value)
    cur.expect_sym(";")
    pairs: list[tuple[str, str]] = []
    if cur.at_word("order"):
        cur.next()
        cur.expect_sym(":")
        while cur.peek().kind == "ident":
            a = cur.next().value
            cur.expect_sym("<")
            b = cur.expect_ident().value
            cur.expect_sym(";")
            pairs.append((a, b))
        if cur.at_sym(";"):  # allow the degenerate "order: ;"
            cur.next()
    t = cur.peek()
    if t.kind != "eof":
        raise ParseError(f"unexpected '{t.value}'", t.line, t.col)
    return Lattice(tuple(elements), tuple(pairs))
