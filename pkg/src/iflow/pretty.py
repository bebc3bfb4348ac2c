"""Deterministic rendering of programs, expressions, labels, and facts.

The output reparses to a structurally identical tree, so transformed
programs can be written out, inspected, and fed back in.
"""

from __future__ import annotations

from typing import Mapping

from .errors import InternalError
from .labels import Cond, Join, Label, Level, Meet
from .lang import Assign, BinOp, BracketAssign, Cmd, Expr, If, Lit, Seq, Skip, Var, While

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
         "+": 4, "-": 4, "*": 5, "%": 5}


def render_expr(e: Expr) -> str:
    return _expr(e, 0)


def _expr(e: Expr, parent: int) -> str:
    match e:
        case Lit(value):
            return str(value)
        case Var(name):
            return name
        case BinOp(op, left, right):
            prec = _PREC[op]
            text = f"{_expr(left, prec)} {op} {_expr(right, prec + 1)}"
            return f"({text})" if prec < parent else text
    raise InternalError(f"not an expression: {e!r}")


def render_cmd(c: Cmd, indent: int = 0) -> str:
    pad = "  " * indent
    match c:
        case Skip():
            return f"{pad}skip;"
        case Seq(first, second):
            return f"{render_cmd(first, indent)}\n{render_cmd(second, indent)}"
        case Assign(_, target, rhs):
            return f"{pad}{target} := {render_expr(rhs)};"
        case BracketAssign(_, target, rhs):
            return f"{pad}[{target} := {render_expr(rhs)}];"
        case If(guard, then_branch, else_branch):
            out = f"{pad}if ({render_expr(guard)}) {{\n{render_cmd(then_branch, indent + 1)}\n{pad}}}"
            if not isinstance(else_branch, Skip):
                out += f" else {{\n{render_cmd(else_branch, indent + 1)}\n{pad}}}"
            return out
        case While(guard, body):
            return f"{pad}while ({render_expr(guard)}) {{\n{render_cmd(body, indent + 1)}\n{pad}}}"
    raise InternalError(f"not a command: {c!r}")


def render_program(
    c: Cmd,
    active: Mapping[str, str] | None = None,
    init: Mapping[str, int] | None = None,
) -> str:
    """Program text with optional final-active-set headers and init declarations.

    Only non-identity active entries are emitted; readers reconstruct the
    rest as the identity over the program's variables.
    """
    lines = []
    if active:
        for var in sorted(active):
            if active[var] != var:
                lines.append(f"#active {var} = {active[var]}")
    if init:
        for var in sorted(init):
            lines.append(f"init {var} = {init[var]};")
    lines.append(render_cmd(c))
    return "\n".join(lines) + "\n"


_LPREC = {"join": 1, "meet": 2}


def render_label(t: Label) -> str:
    return _label(t, 0)


def _label(t: Label, parent: int) -> str:
    match t:
        case Level(name):
            return name
        case Cond(guard, if_true, if_false):
            return f"({render_expr(guard)} ? {_label(if_true, 0)} : {_label(if_false, 0)})"
        case Join(left, right):
            text = f"{_label(left, 1)} \\/ {_label(right, 2)}"
            return text  # lowest precedence; conditional atoms are self-delimiting
        case Meet(left, right):
            return f"{_label(left, 2)} /\\ {_label(right, 3)}"
    raise InternalError(f"not a label: {t!r}")


def render_label_file(entries: Mapping[str, Label], default: Label | None = None) -> str:
    lines = [f"label {name} : {render_label(entries[name])};" for name in sorted(entries)]
    if default is not None:
        lines.append(f"default : {render_label(default)};")
    return "\n".join(lines) + "\n"
