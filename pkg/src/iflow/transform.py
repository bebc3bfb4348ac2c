"""Copy-introducing program transformation driven by bracketed assignments.

The transformation threads an *active set* through the program: an injective
map from each source variable to the copy currently holding its value.  A
plain assignment writes back to the base variable; a bracketed assignment
mints a fresh copy ``x@k`` and redirects the active set to it.  Branches are
reconciled by minting a fresh copy wherever the two arms disagree and
appending the synchronizing assignments inside each arm, so the transformed
program needs no special merge construct and keeps ordinary semantics.

A program with no bracketed assignment transforms to itself with an
unchanged active set.
"""

from __future__ import annotations

import re

from .errors import AnalysisError, InternalError
from .lang import (
    Assign,
    BinOp,
    BracketAssign,
    Cmd,
    Expr,
    If,
    Lit,
    Seq,
    Skip,
    Var,
    While,
    renumber_sites,
    seq,
    vars_of_cmd,
)

ActiveSet = dict[str, str]

_COPY_RE = re.compile(r"\A([A-Za-z_][A-Za-z_0-9]*)(?:@([0-9]+))?\Z")


def base_of(v: str) -> str:
    """Source variable behind a transformed-program variable (strips ``@k``)."""
    m = _COPY_RE.match(v)
    if not m:
        raise AnalysisError(f"malformed variable name '{v}'")
    return m.group(1)


def copy_index(v: str) -> int:
    """Copy index of ``v``; 0 for an unsuffixed base variable."""
    m = _COPY_RE.match(v)
    if not m:
        raise AnalysisError(f"malformed variable name '{v}'")
    return int(m.group(2)) if m.group(2) else 0


class FreshCounter:
    """Per-base allocator for copy names; indices are never reused."""

    def __init__(self, taken: frozenset[str] | set[str] = frozenset()):
        self._next: dict[str, int] = {}
        for v in taken:
            base = base_of(v)
            idx = copy_index(v)
            self._next[base] = max(self._next.get(base, 1), idx + 1)

    def fresh(self, base: str) -> str:
        k = self._next.get(base, 1)
        self._next[base] = k + 1
        return f"{base}@{k}"


def _assert_injective(a: ActiveSet) -> None:
    if len(set(a.values())) != len(a):
        raise InternalError(f"active set is not injective: {a}")


def identity_active_set(variables: frozenset[str] | set[str]) -> ActiveSet:
    return {v: v for v in sorted(variables)}


def transform_expr(a: ActiveSet, e: Expr) -> Expr:
    """Replace every variable of ``e`` by its active copy."""
    match e:
        case Lit():
            return e
        case Var(name):
            try:
                return Var(a[name])
            except KeyError:
                raise AnalysisError(f"variable '{name}' not covered by the active set") from None
        case BinOp(op, left, right):
            return BinOp(op, transform_expr(a, left), transform_expr(a, right))
    raise InternalError(f"not an expression: {e!r}")


def phi_merge(a1: ActiveSet, a2: ActiveSet, fc: FreshCounter) -> ActiveSet:
    """Reconcile the active sets of two branches, minting fresh copies where they differ."""
    if a1.keys() != a2.keys():
        raise InternalError("active sets with different domains cannot be merged")
    out: ActiveSet = {}
    for var in sorted(a1):
        out[var] = a1[var] if a1[var] == a2[var] else fc.fresh(var)
    _assert_injective(out)
    return out


def set_assign(target: ActiveSet, source: ActiveSet) -> Cmd:
    """Assignments copying ``source``'s picture of each variable into ``target``'s.

    One plain assignment per differing variable, in sorted variable order
    (the copies involved are pairwise distinct, so the order cannot matter
    semantically); Skip when the sets agree.
    """
    if target.keys() != source.keys():
        raise InternalError("active sets with different domains cannot be synchronized")
    out: Cmd = Skip()
    for var in sorted(target, reverse=True):
        if target[var] != source[var]:
            out = seq(Assign(None, target[var], Var(source[var])), out)
    return out


def transform_cmd(a: ActiveSet, c: Cmd, fc: FreshCounter) -> tuple[ActiveSet, Cmd]:
    """Transform ``c`` under active set ``a``; returns the final active set and program.

    The loop case transforms the body twice: a throwaway pass from ``a``
    discovers which variables the body redefines, the merged set from that
    pass is the loop invariant, and a second pass from the merged set yields
    the emitted body.  Copies minted during the throwaway pass are simply
    never emitted.
    """
    _assert_injective(a)
    match c:
        case Skip():
            return a, c
        case Seq(first, second):
            a1, t1 = transform_cmd(a, first, fc)
            a2, t2 = transform_cmd(a1, second, fc)
            return a2, Seq(t1, t2)
        case Assign(site, target, rhs):
            rhs_t = transform_expr(a, rhs)
            a1 = dict(a)
            a1[target] = target
            _assert_injective(a1)
            return a1, Assign(site, target, rhs_t)
        case BracketAssign(site, target, rhs):
            rhs_t = transform_expr(a, rhs)
            copy = fc.fresh(target)
            a1 = dict(a)
            a1[target] = copy
            _assert_injective(a1)
            return a1, Assign(site, copy, rhs_t)
        case If(guard, then_branch, else_branch):
            guard_t = transform_expr(a, guard)
            a1, t1 = transform_cmd(a, then_branch, fc)
            a2, t2 = transform_cmd(a, else_branch, fc)
            a3 = phi_merge(a1, a2, fc)
            return a3, If(guard_t, seq(t1, set_assign(a3, a1)), seq(t2, set_assign(a3, a2)))
        case While(guard, body):
            a1, _ = transform_cmd(a, body, fc)
            a2 = phi_merge(a, a1, fc)
            guard_t = transform_expr(a2, guard)
            a3, body_t = transform_cmd(a2, body, fc)
            loop = While(guard_t, seq(body_t, set_assign(a2, a3)))
            return a2, seq(set_assign(a2, a), loop)
    raise InternalError(f"not a command: {c!r}")


def transform_program(c: Cmd, extra_vars: frozenset[str] | set[str] = frozenset()) -> tuple[ActiveSet, Cmd]:
    """Whole-program transformation from the identity active set.

    Returns the final active set and the transformed program with sites
    renumbered in textual order.  Bracket-free programs pass through
    untouched, which also lets already-transformed programs (whose copy
    names contain ``@``) be re-checked.
    """
    variables = vars_of_cmd(c) | set(extra_vars)
    a0 = identity_active_set(variables)
    if not _contains_bracket(c):
        return a0, c
    for v in variables:
        if "@" in v:
            raise AnalysisError(
                f"bracketed programs must use plain source variables, found '{v}'"
            )
    fc = FreshCounter(variables)
    a_final, ct = transform_cmd(a0, c, fc)
    return a_final, renumber_sites(ct)


def _contains_bracket(c: Cmd) -> bool:
    match c:
        case BracketAssign():
            return True
        case Seq(first, second):
            return _contains_bracket(first) or _contains_bracket(second)
        case If(_, t, e):
            return _contains_bracket(t) or _contains_bracket(e)
        case While(_, body):
            return _contains_bracket(body)
        case _:
            return False


def bracket_all(c: Cmd) -> Cmd:
    """Turn every assignment into a bracketed one (maximal copy introduction)."""
    match c:
        case Skip():
            return c
        case Seq(first, second):
            return Seq(bracket_all(first), bracket_all(second))
        case Assign(site, target, rhs):
            return BracketAssign(site, target, rhs)
        case BracketAssign():
            return c
        case If(guard, then_branch, else_branch):
            return If(guard, bracket_all(then_branch), bracket_all(else_branch))
        case While(guard, body):
            return While(guard, bracket_all(body))
    raise InternalError(f"not a command: {c!r}")
