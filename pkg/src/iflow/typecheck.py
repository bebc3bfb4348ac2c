"""The dependent-label type system over transformed programs.

Checking a source program is a pipeline: transform it (identity initial
active set), resolve the label file onto the transformed variables, check
environment well-formedness, run liveness (seeded with the final active
set) and the fact generator, then walk the program collecting one ordering
obligation per assignment plus the liveness side condition that stops
implicit declassification.

An obligation ``hypothesis |= lhs <= rhs`` is discharged by enumerating
truth assignments to the guard expressions occurring in the two labels.
Assignments whose guard literals are inconsistent with the hypothesis are
skipped; inconsistency is shown either propositionally (the same atom
asserted both ways) or by rational linear arithmetic.  Both directions of
approximation are conservative: a case we fail to prove inconsistent is
still checked, and an unknown verdict rejects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .analysis import Cfg, FactSet, LivenessMap, build_cfg, fact_as_atom, liveness, predicates
from .errors import AnalysisError, ConfigError, InternalError
from .labels import (
    Label,
    Level,
    TypingEnv,
    WfViolation,
    env_wellformed,
    join_labels,
    label_free_vars,
    label_guards,
    label_eval_cases,
)
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
    vars_of_cmd,
)
from .lattice import Lattice
from .linarith import atom_constraints, satisfiable
from .parser import LabelFile, ParsedProgram
from .transform import ActiveSet, transform_program


def type_of_expr(g: Mapping[str, Label], e: Expr, lat: Lattice) -> Label:
    """Label of an expression: literals are bottom, operators join their operands."""
    match e:
        case Lit():
            return Level(lat.bottom)
        case Var(name):
            try:
                return g[name]
            except KeyError:
                raise AnalysisError(f"variable '{name}' has no label") from None
        case BinOp(_, left, right):
            return join_labels(type_of_expr(g, left, lat), type_of_expr(g, right, lat), lat)
    raise InternalError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Obligation discharge


def _case_consistency(atoms: list[tuple[Expr, bool]]) -> str:
    """'inconsistent' | 'consistent' | 'unknown' for a conjunction of atoms."""
    seen: dict[Expr, bool] = {}
    for expr, truth in atoms:
        if seen.setdefault(expr, truth) != truth:
            return "inconsistent"
    constraints = []
    complete = True
    for expr, truth in atoms:
        cs, ok = atom_constraints(expr, truth)
        constraints.extend(cs)
        complete = complete and ok
    verdict = satisfiable(constraints)
    if verdict is False:
        return "inconsistent"
    if verdict is True and complete:
        return "consistent"
    return "unknown"


def discharge_obligation(
    hypo: FactSet,
    lhs: Label,
    rhs: Label,
    lat: Lattice,
    guard_cap: int = 12,
) -> tuple[str, dict[Expr, bool] | None]:
    """Validity of ``hypo |= lhs <= rhs`` by case-split over label guards.

    Returns (status, witness): status is "valid", "violated" or "unknown";
    a violation carries the guard valuation that exhibits it.
    """
    guards: list[Expr] = []
    for lbl in (lhs, rhs):
        for g in label_guards(lbl):
            if g not in guards:
                guards.append(g)
    if len(guards) > guard_cap:
        return "unknown", None

    hypo_atoms = [fact_as_atom(f) for f in sorted(hypo, key=repr)]
    saw_unknown = False
    for bits in itertools.product((True, False), repeat=len(guards)):
        sigma = dict(zip(guards, bits))
        consistency = _case_consistency(hypo_atoms + list(sigma.items()))
        if consistency == "inconsistent":
            continue
        low = label_eval_cases(lhs, sigma, lat)
        high = label_eval_cases(rhs, sigma, lat)
        if lat.leq(low, high):
            continue
        if consistency == "consistent":
            return "violated", sigma
        saw_unknown = True
    return ("unknown", None) if saw_unknown else ("valid", None)


# ---------------------------------------------------------------------------
# Command checking


@dataclass
class Obligation:
    site: int
    hypothesis: FactSet
    lhs: Label
    rhs: Label
    status: str = "unknown"
    witness: dict[Expr, bool] | None = None


@dataclass(frozen=True)
class SideFailure:
    """Assignment at ``site`` would silently change the level of live ``variable``."""

    site: int
    target: str
    variable: str


def check_cmd(
    g: Mapping[str, Label],
    lat: Lattice,
    pc: Label,
    c: Cmd,
    preds: Mapping[int, FactSet],
    live: LivenessMap,
    guard_cap: int = 12,
) -> tuple[list[Obligation], list[SideFailure]]:
    obligations: list[Obligation] = []
    side_failures: list[SideFailure] = []

    def walk(cmd: Cmd, pc: Label) -> None:
        match cmd:
            case Skip():
                return
            case Seq(first, second):
                walk(first, pc)
                walk(second, pc)
            case Assign(site, target, rhs):
                if site is None:
                    raise InternalError("assignment sites must be numbered before checking")
                tau = type_of_expr(g, rhs, lat)
                lhs = join_labels(tau, pc, lat)
                try:
                    target_label = g[target]
                except KeyError:
                    raise AnalysisError(f"variable '{target}' has no label") from None
                status, witness = discharge_obligation(
                    preds[site], lhs, target_label, lat, guard_cap
                )
                obligations.append(
                    Obligation(site, preds[site], lhs, target_label, status, witness)
                )
                for v in sorted(live.after[site]):
                    lbl = g.get(v)
                    if lbl is None:
                        raise AnalysisError(f"variable '{v}' has no label")
                    if target in label_free_vars(lbl):
                        side_failures.append(SideFailure(site, target, v))
            case BracketAssign():
                raise InternalError("only transformed programs can be checked")
            case If(guard, then_branch, else_branch):
                inner = join_labels(type_of_expr(g, guard, lat), pc, lat)
                walk(then_branch, inner)
                walk(else_branch, inner)
            case While(guard, body):
                inner = join_labels(type_of_expr(g, guard, lat), pc, lat)
                walk(body, inner)
            case _:
                raise InternalError(f"not a command: {cmd!r}")

    walk(c, pc)
    return obligations, side_failures


# ---------------------------------------------------------------------------
# Whole-program checking


@dataclass
class CheckOptions:
    levels_only: bool = False
    guard_cap: int = 12


@dataclass
class CheckReport:
    verdict: str  # "accept" | "reject"
    obligations: list[Obligation]
    side_failures: list[SideFailure]
    wf_violations: list[WfViolation]
    transformed: Cmd
    active_final: ActiveSet
    env: TypingEnv
    cfg: Cfg = field(repr=False, default=None)  # type: ignore[assignment]
    live: LivenessMap = field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"


def check_program(
    program: ParsedProgram | Cmd,
    labels: LabelFile,
    lat: Lattice,
    options: CheckOptions | None = None,
) -> CheckReport:
    """Transform, resolve labels, and check; accept only when everything holds."""
    options = options or CheckOptions()
    if isinstance(program, ParsedProgram):
        cmd = program.cmd
        extra = frozenset(program.init)
    else:
        cmd = program
        extra = frozenset()

    a_final, ct = transform_program(cmd, extra)
    universe = vars_of_cmd(ct) | set(a_final) | set(a_final.values())
    env = labels.resolve(universe)
    if options.levels_only:
        bad = sorted(v for v, lbl in env.items() if not isinstance(lbl, Level))
        if bad:
            raise ConfigError(
                "levels-only mode forbids dependent labels; offending variable(s): "
                + ", ".join(bad)
            )

    wf_violations = env_wellformed(env, lat)
    cfg = build_cfg(ct)
    live = liveness(cfg, env, a_final)
    facts = predicates(ct)
    # A label whose guard reads a variable the program does not even have
    # cannot be evaluated at run time; report the well-formedness violation
    # instead of chasing the phantom variable through the rules.
    evaluable = all(
        dep in env for lbl in env.values() for dep in label_free_vars(lbl)
    )
    if evaluable:
        obligations, side_failures = check_cmd(
            env, lat, Level(lat.bottom), ct, facts, live, options.guard_cap
        )
    else:
        obligations, side_failures = [], []
    ok = (
        not wf_violations
        and not side_failures
        and all(o.status == "valid" for o in obligations)
    )
    return CheckReport(
        "accept" if ok else "reject",
        obligations,
        side_failures,
        wf_violations,
        ct,
        a_final,
        env,
        cfg,
        live,
    )
