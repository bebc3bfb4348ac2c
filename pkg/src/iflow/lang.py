"""Abstract syntax and big-step expression evaluation for the WHILE language.

Programs are immutable trees of frozen dataclasses, so structural equality
and hashing come for free and values can be shared across threads.  A memory
is a plain ``dict`` from variable name to ``int``.

Integers are 64-bit signed; an arithmetic result outside that range is a
runtime error rather than silent wrap-around.  Comparisons yield 1/0 and the
logical operators ``&&``/``||`` evaluate both operands (expressions are
side-effect free, so short-circuiting would be unobservable anyway).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import EvalError, InternalError

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

BINARY_OPS = ("+", "-", "*", "%", "==", "!=", "<", "<=", ">", ">=", "&&", "||")


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Lit, Var, BinOp]


# ---------------------------------------------------------------------------
# Commands


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Seq:
    first: "Cmd"
    second: "Cmd"


@dataclass(frozen=True)
class Assign:
    site: int | None
    target: str
    rhs: Expr


@dataclass(frozen=True)
class BracketAssign:
    """Source-only marker requesting a fresh copy of the target during transformation."""

    site: int | None
    target: str
    rhs: Expr


@dataclass(frozen=True)
class If:
    guard: Expr
    then_branch: "Cmd"
    else_branch: "Cmd"


@dataclass(frozen=True)
class While:
    guard: Expr
    body: "Cmd"


Cmd = Union[Skip, Seq, Assign, BracketAssign, If, While]

Memory = dict[str, int]


# ---------------------------------------------------------------------------
# Evaluation


def eval_expr(m: Memory, e: Expr) -> int:
    """Big-step value of ``e`` under memory ``m``.

    Raises EvalError for ``%`` with zero right operand and for 64-bit overflow.
    """
    match e:
        case Lit(value):
            return value
        case Var(name):
            try:
                return m[name]
            except KeyError:
                raise InternalError(f"variable '{name}' not present in memory") from None
        case BinOp(op, left, right):
            a = eval_expr(m, left)
            b = eval_expr(m, right)
            return _apply_op(op, a, b)
    raise InternalError(f"not an expression: {e!r}")


def _apply_op(op: str, a: int, b: int) -> int:
    if op == "+":
        v = a + b
    elif op == "-":
        v = a - b
    elif op == "*":
        v = a * b
    elif op == "%":
        if b == 0:
            raise EvalError("modulo by zero")
        v = a % b
    elif op == "==":
        return 1 if a == b else 0
    elif op == "!=":
        return 1 if a != b else 0
    elif op == "<":
        return 1 if a < b else 0
    elif op == "<=":
        return 1 if a <= b else 0
    elif op == ">":
        return 1 if a > b else 0
    elif op == ">=":
        return 1 if a >= b else 0
    elif op == "&&":
        return 1 if (a != 0 and b != 0) else 0
    elif op == "||":
        return 1 if (a != 0 or b != 0) else 0
    else:
        raise InternalError(f"unknown operator {op!r}")
    if v < INT_MIN or v > INT_MAX:
        raise EvalError(f"integer overflow in '{op}'")
    return v


# ---------------------------------------------------------------------------
# Syntactic helpers


def vars_of_expr(e: Expr) -> frozenset[str]:
    match e:
        case Lit():
            return frozenset()
        case Var(name):
            return frozenset((name,))
        case BinOp(_, left, right):
            return vars_of_expr(left) | vars_of_expr(right)
    raise InternalError(f"not an expression: {e!r}")


def vars_of_cmd(c: Cmd) -> frozenset[str]:
    match c:
        case Skip():
            return frozenset()
        case Seq(first, second):
            return vars_of_cmd(first) | vars_of_cmd(second)
        case Assign(_, target, rhs) | BracketAssign(_, target, rhs):
            return frozenset((target,)) | vars_of_expr(rhs)
        case If(guard, then_branch, else_branch):
            return vars_of_expr(guard) | vars_of_cmd(then_branch) | vars_of_cmd(else_branch)
        case While(guard, body):
            return vars_of_expr(guard) | vars_of_cmd(body)
    raise InternalError(f"not a command: {c!r}")


def assigned_vars(c: Cmd) -> frozenset[str]:
    """Variables written by any assignment syntactically inside ``c``."""
    match c:
        case Skip():
            return frozenset()
        case Seq(first, second):
            return assigned_vars(first) | assigned_vars(second)
        case Assign(_, target, _) | BracketAssign(_, target, _):
            return frozenset((target,))
        case If(_, then_branch, else_branch):
            return assigned_vars(then_branch) | assigned_vars(else_branch)
        case While(_, body):
            return assigned_vars(body)
    raise InternalError(f"not a command: {c!r}")


def has_brackets(c: Cmd) -> bool:
    match c:
        case BracketAssign():
            return True
        case Seq(first, second):
            return has_brackets(first) or has_brackets(second)
        case If(_, then_branch, else_branch):
            return has_brackets(then_branch) or has_brackets(else_branch)
        case While(_, body):
            return has_brackets(body)
        case _:
            return False


def assignments_in_order(c: Cmd) -> list[Assign | BracketAssign]:
    """All assignment nodes in textual (left-to-right) order."""
    out: list[Assign | BracketAssign] = []

    def walk(cmd: Cmd) -> None:
        match cmd:
            case Seq(first, second):
                walk(first)
                walk(second)
            case Assign() | BracketAssign():
                out.append(cmd)
            case If(_, then_branch, else_branch):
                walk(then_branch)
                walk(else_branch)
            case While(_, body):
                walk(body)
            case _:
                pass

    walk(c)
    return out


def renumber_sites(c: Cmd) -> Cmd:
    """Return ``c`` with assignment sites renumbered 1.. in textual order."""
    counter = [0]

    def walk(cmd: Cmd) -> Cmd:
        match cmd:
            case Skip():
                return cmd
            case Seq(first, second):
                return Seq(walk(first), walk(second))
            case Assign(_, target, rhs):
                counter[0] += 1
                return Assign(counter[0], target, rhs)
            case BracketAssign(_, target, rhs):
                counter[0] += 1
                return BracketAssign(counter[0], target, rhs)
            case If(guard, then_branch, else_branch):
                return If(guard, walk(then_branch), walk(else_branch))
            case While(guard, body):
                return While(guard, walk(body))
        raise InternalError(f"not a command: {cmd!r}")

    return walk(c)


def normalize_seq(c: Cmd) -> Cmd:
    """Re-associate sequencing to the parser's canonical right-nested shape."""
    match c:
        case Seq():
            stmts: list[Cmd] = []

            def flatten(cmd: Cmd) -> None:
                if isinstance(cmd, Seq):
                    flatten(cmd.first)
                    flatten(cmd.second)
                else:
                    stmts.append(normalize_seq(cmd))

            flatten(c)
            out = stmts[-1]
            for s in reversed(stmts[:-1]):
                out = Seq(s, out)
            return out
        case If(guard, then_branch, else_branch):
            return If(guard, normalize_seq(then_branch), normalize_seq(else_branch))
        case While(guard, body):
            return While(guard, normalize_seq(body))
        case _:
            return c


def seq(first: Cmd, second: Cmd) -> Cmd:
    """Sequence two commands, dropping Skip padding.

    Used when stitching transformer-emitted pieces so that programs without
    bracketed assignments transform to themselves, node for node.
    """
    if isinstance(first, Skip):
        return second
    if isinstance(second, Skip):
        return first
    return Seq(first, second)


def zero_memory(c: Cmd, extra: frozenset[str] | set[str] = frozenset()) -> Memory:
    """Memory with every variable of ``c`` (plus ``extra``) set to 0."""
    return {v: 0 for v in sorted(vars_of_cmd(c) | set(extra))}
