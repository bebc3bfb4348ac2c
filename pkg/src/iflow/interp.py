"""Small-step execution, plus the erasing variant used as a proof-inspired oracle.

``step`` applies exactly one transition rule.  ``run`` iterates it from a
zero-initialized memory.  ``erasure_run`` is identical except that each
assignment to ``x`` additionally zeroes every variable that is dead right
after that site and whose label mentions ``x``; on the final active set it
provably agrees with the standard run, which the differential tests exercise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Union

from .errors import EvalError, InternalError
from .labels import Label, label_free_vars
from .lang import (
    Assign,
    BracketAssign,
    Cmd,
    If,
    Memory,
    Seq,
    Skip,
    While,
    eval_expr,
    vars_of_cmd,
)


@dataclass
class Config:
    memory: Memory
    cmd: Cmd
    steps: int = 0


@dataclass(frozen=True)
class Terminated:
    memory: Memory
    steps: int


@dataclass(frozen=True)
class StepLimit:
    memory: Memory
    steps: int


@dataclass(frozen=True)
class RunError:
    reason: str
    memory: Memory
    steps: int
    site: int | None = None


RunOutcome = Union[Terminated, StepLimit, RunError]

# (site, target, memory after the update) for the assignment just executed
_AssignHook = Callable[[int | None, str, Memory], None]


def _step(m: Memory, c: Cmd, on_assign: _AssignHook | None = None) -> tuple[Memory, Cmd]:
    match c:
        case Assign(site, target, rhs) | BracketAssign(site, target, rhs):
            value = eval_expr(m, rhs)
            m2 = dict(m)
            m2[target] = value
            if on_assign is not None:
                on_assign(site, target, m2)
            return m2, Skip()
        case Seq(Skip(), second):
            return m, second
        case Seq(first, second):
            m2, first2 = _step(m, first, on_assign)
            return m2, Seq(first2, second)
        case If(guard, then_branch, else_branch):
            return m, (then_branch if eval_expr(m, guard) != 0 else else_branch)
        case While(guard, body):
            return m, If(guard, Seq(body, c), Skip())
        case Skip():
            raise InternalError("skip has no successor configuration")
    raise InternalError(f"not a command: {c!r}")


def step(cfg: Config) -> Config:
    """One transition; the rules are deterministic, so this is a function."""
    m, c = _step(cfg.memory, cfg.cmd)
    return Config(m, c, cfg.steps + 1)


def _run_loop(
    c: Cmd,
    m0: Memory,
    max_steps: int,
    on_assign: _AssignHook | None = None,
    pre_assign: _AssignHook | None = None,
) -> RunOutcome:
    if max_steps < 1:
        raise InternalError("max_steps must be at least 1")
    m = dict(m0)
    steps = 0
    cmd = c
    while not isinstance(cmd, Skip):
        if steps >= max_steps:
            return StepLimit(m, steps)
        try:
            if pre_assign is not None:
                _observe_next_assign(m, cmd, pre_assign)
            m, cmd = _step(m, cmd, on_assign)
        except EvalError as exc:
            return RunError(str(exc), m, steps)
        steps += 1
    return Terminated(m, steps)


def _observe_next_assign(m: Memory, c: Cmd, observer: _AssignHook) -> None:
    # Walk to the redex; call the observer when it is an assignment.
    match c:
        case Assign(site, target, _) | BracketAssign(site, target, _):
            observer(site, target, m)
        case Seq(first, _) if not isinstance(first, Skip):
            _observe_next_assign(m, first, observer)
        case _:
            pass


def run(c: Cmd, m0: Memory | None = None, max_steps: int = 10_000) -> RunOutcome:
    """Iterate ``step`` from a memory that zero-initializes all program variables."""
    base: Memory = {v: 0 for v in vars_of_cmd(c)}
    if m0:
        base.update(m0)
    return _run_loop(c, base, max_steps)


def run_traced(
    c: Cmd,
    m0: Memory | None,
    max_steps: int,
    before_assign: Callable[[int | None, str, Memory], None],
) -> RunOutcome:
    """Like ``run`` but calls ``before_assign(site, target, memory)`` at each site."""
    base: Memory = {v: 0 for v in vars_of_cmd(c)}
    if m0:
        base.update(m0)
    return _run_loop(c, base, max_steps, pre_assign=before_assign)


def erasure_run(
    c: Cmd,
    m0: Memory | None,
    g: Mapping[str, Label],
    live_after: Mapping[int, frozenset[str]],
    max_steps: int = 10_000,
) -> RunOutcome:
    """Run ``c`` under the erasing assignment rule.

    ``c`` must be a transformed (bracket-free) program and ``live_after``
    the per-site live sets computed for it with the final active set as the
    seed.  After an assignment to ``x`` at site ``s``, every variable whose
    label mentions ``x`` and that is not live after ``s`` is reset to 0.
    """
    dependents: dict[str, list[str]] = {}
    for var, lbl in g.items():
        for dep in label_free_vars(lbl):
            dependents.setdefault(dep, []).append(var)
    for lst in dependents.values():
        lst.sort()

    def erase(site: int | None, target: str, m2: Memory) -> None:
        if site is None:
            raise InternalError("erasure semantics needs numbered assignment sites")
        live = live_after.get(site, frozenset())
        for victim in dependents.get(target, ()):
            if victim not in live and victim in m2:
                m2[victim] = 0

    base: Memory = {v: 0 for v in vars_of_cmd(c)}
    if m0:
        base.update(m0)
    return _run_loop(c, base, max_steps, on_assign=erase)


def debracket(c: Cmd) -> Cmd:
    """Replace every bracketed assignment by a plain one (semantics-preserving)."""
    match c:
        case BracketAssign(site, target, rhs):
            return Assign(site, target, rhs)
        case Seq(first, second):
            return Seq(debracket(first), debracket(second))
        case If(guard, t, e):
            return If(guard, debracket(t), debracket(e))
        case While(guard, body):
            return While(guard, debracket(body))
        case _:
            return c
