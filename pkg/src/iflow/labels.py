"""Security labels, typing environments, and the memory-indexed relations on them.

A label is either a concrete lattice level, a conditional ``(e ? t1 : t2)``
whose branch is picked by evaluating ``e`` at run time, or the join/meet of
two labels.  A typing environment maps (transformed-program) variables to
labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .errors import InternalError
from .lang import Expr, Memory, eval_expr, vars_of_expr
from .lattice import Lattice


@dataclass(frozen=True)
class Level:
    name: str


@dataclass(frozen=True)
class Cond:
    guard: Expr
    if_true: "Label"
    if_false: "Label"


@dataclass(frozen=True)
class Join:
    left: "Label"
    right: "Label"


@dataclass(frozen=True)
class Meet:
    left: "Label"
    right: "Label"


Label = Union[Level, Cond, Join, Meet]

TypingEnv = dict[str, Label]


def label_eval(m: Memory, t: Label, lat: Lattice) -> str:
    """Concrete level of ``t`` under memory ``m``."""
    match t:
        case Level(name):
            lat._check(name)
            return name
        case Cond(guard, if_true, if_false):
            branch = if_true if eval_expr(m, guard) != 0 else if_false
            return label_eval(m, branch, lat)
        case Join(left, right):
            return lat.join(label_eval(m, left, lat), label_eval(m, right, lat))
        case Meet(left, right):
            return lat.meet(label_eval(m, left, lat), label_eval(m, right, lat))
    raise InternalError(f"not a label: {t!r}")


def label_free_vars(t: Label) -> frozenset[str]:
    """Variables read by any conditional guard inside ``t``."""
    match t:
        case Level():
            return frozenset()
        case Cond(guard, if_true, if_false):
            return vars_of_expr(guard) | label_free_vars(if_true) | label_free_vars(if_false)
        case Join(left, right) | Meet(left, right):
            return label_free_vars(left) | label_free_vars(right)
    raise InternalError(f"not a label: {t!r}")


def label_guards(t: Label) -> list[Expr]:
    """Distinct guard expressions of ``t`` in depth-first order."""
    out: list[Expr] = []

    def walk(lbl: Label) -> None:
        match lbl:
            case Level():
                pass
            case Cond(guard, if_true, if_false):
                if guard not in out:
                    out.append(guard)
                walk(if_true)
                walk(if_false)
            case Join(left, right) | Meet(left, right):
                walk(left)
                walk(right)

    walk(t)
    return out


def label_eval_cases(t: Label, truth: Mapping[Expr, bool], lat: Lattice) -> str:
    """Level of ``t`` when each guard's truth value is fixed by ``truth``."""
    match t:
        case Level(name):
            return name
        case Cond(guard, if_true, if_false):
            branch = if_true if truth[guard] else if_false
            return label_eval_cases(branch, truth, lat)
        case Join(left, right):
            return lat.join(label_eval_cases(left, truth, lat),
                            label_eval_cases(right, truth, lat))
        case Meet(left, right):
            return lat.meet(label_eval_cases(left, truth, lat),
                            label_eval_cases(right, truth, lat))
    raise InternalError(f"not a label: {t!r}")


def join_labels(a: Label, b: Label, lat: Lattice) -> Label:
    """Join of two labels, folded to a plain level when both are levels."""
    if isinstance(a, Level) and isinstance(b, Level):
        return Level(lat.join(a.name, b.name))
    return Join(a, b)


@dataclass(frozen=True)
class WfViolation:
    var: str
    dep: str
    reason: str


def env_wellformed(g: TypingEnv, lat: Lattice) -> list[WfViolation]:
    """Check the two well-formedness clauses; an empty list means ok.

    For every x and every x' free in Gamma(x): Gamma(x') must itself be
    variable-free, and Gamma(x') must be below Gamma(x) for every valuation
    of the guards (discharged by case-split with an empty hypothesis).
    Self-dependence is a special case of the first clause.
    """
    from .typecheck import discharge_obligation  # local import to avoid a cycle

    violations: list[WfViolation] = []
    for var in sorted(g):
        for dep in sorted(label_free_vars(g[var])):
            if dep not in g:
                violations.append(WfViolation(var, dep, f"'{dep}' has no label"))
                continue
            if label_free_vars(g[dep]):
                violations.append(
                    WfViolation(var, dep, f"label of '{dep}' is not variable-free")
                )
                continue
            status, _ = discharge_obligation(frozenset(), g[dep], g[var], lat)
            if status != "valid":
                violations.append(
                    WfViolation(var, dep, f"label of '{dep}' is not below label of '{var}'")
                )
    return violations


def project_memory(mt: Memory, a: Mapping[str, str]) -> Memory:
    """Memory over source variables read through the active set ``a``."""
    out: Memory = {}
    for var, copy in a.items():
        try:
            out[var] = mt[copy]
        except KeyError:
            raise InternalError(f"active copy '{copy}' missing from memory") from None
    return out


def project_env(gt: Mapping[str, Label], a: Mapping[str, str]) -> TypingEnv:
    """Typing environment over source variables read through ``a``."""
    out: TypingEnv = {}
    for var, copy in a.items():
        try:
            out[var] = gt[copy]
        except KeyError:
            raise InternalError(f"active copy '{copy}' has no label") from None
    return out


def low_equiv(m1: Memory, m2: Memory, g: Mapping[str, Label], obs: str, lat: Lattice) -> bool:
    """Equivalence of two memories up to observation level ``obs`` under ``g``.

    Each variable must be observable in both memories or in neither (labels
    may themselves leak), and observable variables must agree on their value.
    """
    for var, lbl in g.items():
        l1 = label_eval(m1, lbl, lat)
        l2 = label_eval(m2, lbl, lat)
        vis1 = lat.leq(l1, obs)
        vis2 = lat.leq(l2, obs)
        if vis1 != vis2:
            return False
        if vis1 and m1[var] != m2[var]:
            return False
    return True
