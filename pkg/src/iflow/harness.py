"""Random program generation and the differential noninterference tester.

Trials are reproducible: every random draw comes from an RNG derived from
(seed, trial index), so running trials in any order or in parallel yields
the same report.  Step-limited runs are discarded rather than counted as
failures; the security property under test is termination-insensitive, and
the report keeps the discard counts visible so a vacuous run is noticeable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import ConfigError, EvalError, IflowError
from .interp import RunError, StepLimit, Terminated, run
from .labels import Cond, Label, Level, label_eval, low_equiv, project_env, project_memory
from .lang import (
    Assign,
    normalize_seq,
    BinOp,
    BracketAssign,
    Cmd,
    Expr,
    Lit,
    Memory,
    Seq,
    Skip,
    Var,
    While,
    If,
    renumber_sites,
    vars_of_cmd,
)
from .lattice import Lattice
from .parser import LabelFile, ParsedProgram
from .transform import identity_active_set, transform_program
from .typecheck import CheckReport, check_program


@dataclass
class GenConfig:
    seed: int = 0
    max_depth: int = 4
    variables: tuple[str, ...] = ("h", "x", "y", "z")
    literal_lo: int = -16
    literal_hi: int = 16
    bracket_prob: float = 0.25
    loop_style: str = "mixed"  # "counter" | "free" | "mixed"


def _rng(seed: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


_EXPR_OPS = (
    "+", "+", "+", "-", "-", "*", "%",
    "==", "!=", "<", "<", "<=", ">", ">=",
    "&&", "||",
)


def _gen_expr(rng: random.Random, cfg: GenConfig, depth: int) -> Expr:
    if depth <= 0 or rng.random() < 0.35:
        if rng.random() < 0.6:
            return Var(rng.choice(cfg.variables))
        return Lit(rng.randint(cfg.literal_lo, cfg.literal_hi))
    op = rng.choice(_EXPR_OPS)
    return BinOp(op, _gen_expr(rng, cfg, depth - 1), _gen_expr(rng, cfg, depth - 2))


def _gen_assign(rng: random.Random, cfg: GenConfig, depth: int) -> Cmd:
    target = rng.choice(cfg.variables)
    rhs = _gen_expr(rng, cfg, min(depth, 2))
    if rng.random() < cfg.bracket_prob:
        return BracketAssign(None, target, rhs)
    return Assign(None, target, rhs)


def _gen_while(rng: random.Random, cfg: GenConfig, depth: int) -> Cmd:
    style = cfg.loop_style
    if style == "mixed":
        style = "counter" if rng.random() < 0.8 else "free"
    if style == "counter":
        counter = rng.choice(cfg.variables)
        bound = rng.randint(1, 4)
        body = Seq(
            _gen_stmt(rng, cfg, depth - 1),
            Assign(None, counter, BinOp("+", Var(counter), Lit(1))),
        )
        return Seq(
            Assign(None, counter, Lit(0)),
            While(BinOp("<", Var(counter), Lit(bound)), body),
        )
    return While(_gen_expr(rng, cfg, 2), _gen_stmt(rng, cfg, depth - 1))


def _gen_stmt(rng: random.Random, cfg: GenConfig, depth: int) -> Cmd:
    if depth <= 0:
        return _gen_assign(rng, cfg, depth) if rng.random() < 0.9 else Skip()
    r = rng.random()
    if r < 0.35:
        return Seq(_gen_stmt(rng, cfg, depth - 1), _gen_stmt(rng, cfg, depth - 1))
    if r < 0.62:
        return _gen_assign(rng, cfg, depth)
    if r < 0.80:
        else_branch = _gen_stmt(rng, cfg, depth - 1) if rng.random() < 0.7 else Skip()
        return If(_gen_expr(rng, cfg, 2), _gen_stmt(rng, cfg, depth - 1), else_branch)
    if r < 0.93:
        return _gen_while(rng, cfg, depth)
    return Skip()


def gen_program(cfg: GenConfig, index: int = 0) -> Cmd:
    """Program ``index`` of the deterministic sequence defined by ``cfg.seed``.

    Some programs get a tail of constant reassignments; that regularly makes
    variables dead mid-program, which the liveness-dependent parts of the
    checker and the erasing semantics otherwise rarely get to exercise.
    """
    rng = _rng(cfg.seed, index)
    body = _gen_stmt(rng, cfg, cfg.max_depth)
    if rng.random() < 0.4:
        for v in cfg.variables:
            if rng.random() < 0.5:
                body = Seq(body, Assign(None, v, Lit(rng.randint(0, 3))))
    return renumber_sites(normalize_seq(body))


_GUARD_OPS = ("<", "<=", ">", ">=", "==", "!=")


def gen_env(cfg: GenConfig, index: int, lat: Lattice, dependent_prob: float = 0.4) -> dict[str, Label]:
    """Random well-formed environment: secrets stay at the top, some public
    variables get a label conditioned on another plain-public variable."""
    rng = _rng(cfg.seed, index * 7919 + 13)
    env: dict[str, Label] = {}
    plain: list[str] = []
    for v in sorted(cfg.variables):
        if v.startswith("h"):
            env[v] = Level(lat.top)
        else:
            env[v] = Level(lat.bottom)
            plain.append(v)
    for v in plain:
        others = [u for u in plain if u != v]
        if others and rng.random() < dependent_prob:
            guard_var = rng.choice(others)
            if rng.random() < 0.3:
                guard: Expr = BinOp("==", BinOp("%", Var(guard_var), Lit(2)), Lit(0))
            else:
                guard = BinOp(rng.choice(_GUARD_OPS), Var(guard_var), Lit(rng.randint(-4, 4)))
            env[v] = Cond(guard, Level(lat.top), Level(lat.bottom))
    return env


def random_memory(variables, rng: random.Random, lo: int = -16, hi: int = 16) -> Memory:
    return {v: rng.randint(lo, hi) for v in sorted(variables)}


def gen_equiv_pair(
    g: dict[str, Label],
    obs: str,
    lat: Lattice,
    rng: random.Random,
    lo: int = -16,
    hi: int = 16,
    resample: int = 40,
) -> tuple[Memory, Memory] | None:
    """A pair of memories equivalent up to ``obs``; None if resampling fails.

    The second memory re-randomizes exactly the variables whose evaluated
    level is not observable; when labels disagree across the pair (a label
    channel) the draw is rejected and retried.
    """
    for _ in range(resample):
        m1 = {v: rng.randint(lo, hi) for v in sorted(g)}
        m2 = dict(m1)
        try:
            for v in sorted(g):
                if not lat.leq(label_eval(m1, g[v], lat), obs):
                    m2[v] = rng.randint(lo, hi)
            if low_equiv(m1, m2, g, obs, lat):
                return m1, m2
        except EvalError:
            continue
    return None


@dataclass(frozen=True)
class Counterexample:
    trial: int
    variable: str
    initial_1: Memory
    initial_2: Memory
    final_1: Memory
    final_2: Memory


@dataclass
class NiTrialReport:
    attempted: int = 0
    passed: int = 0
    failed: int = 0
    discarded_sampling: int = 0
    discarded_divergence: int = 0
    discarded_error: int = 0
    counterexample: Counterexample | None = None
    verdict: str = ""

    @property
    def discarded(self) -> int:
        return self.discarded_sampling + self.discarded_divergence + self.discarded_error


def _first_divergent_var(m1: Memory, m2: Memory, g, obs: str, lat: Lattice) -> str:
    for v in sorted(g):
        l1 = label_eval(m1, g[v], lat)
        l2 = label_eval(m2, g[v], lat)
        if lat.leq(l1, obs) != lat.leq(l2, obs):
            return v
        if lat.leq(l1, obs) and m1[v] != m2[v]:
            return v
    return "?"


def ni_test(
    program: ParsedProgram | Cmd,
    labels: LabelFile,
    lat: Lattice,
    trials: int = 1000,
    seed: int = 0,
    force: bool = False,
    obs: str | None = None,
    max_steps: int = 10_000,
    stop_at_first_failure: bool = True,
) -> NiTrialReport:
    """Differential noninterference test on the source program.

    For each trial, draw an equivalent pair of initial memories, run the
    source program on both, and require the final memories to be equivalent
    under the final active set's labels.  Any failure on a checker-accepted
    program is a soundness bug; on rejected programs (``force=True``) a
    failure is the expected counterexample.
    """
    check = check_program(program, labels, lat)
    if not check.accepted and not force:
        raise ConfigError("the checker rejects this program; pass force=True to test it anyway")

    if isinstance(program, ParsedProgram):
        cmd = program.cmd
        init = dict(program.init)
        source_vars = vars_of_cmd(cmd) | set(init)
    else:
        cmd = program
        init = {}
        source_vars = vars_of_cmd(cmd)

    a0 = identity_active_set(source_vars)
    g_init = project_env(check.env, a0)
    g_fin = project_env(check.env, check.active_final)
    level = obs if obs is not None else lat.bottom

    report = NiTrialReport()
    for i in range(trials):
        rng = _rng(seed, i)
        report.attempted += 1
        pair = gen_equiv_pair(g_init, level, lat, rng)
        if pair is None:
            report.discarded_sampling += 1
            continue
        m1, m2 = pair
        m1.update(init)
        m2.update(init)
        try:
            if not low_equiv(m1, m2, g_init, level, lat):
                report.discarded_sampling += 1
                continue
        except EvalError:
            report.discarded_sampling += 1
            continue
        r1 = run(cmd, m1, max_steps)
        r2 = run(cmd, m2, max_steps)
        if isinstance(r1, StepLimit) or isinstance(r2, StepLimit):
            report.discarded_divergence += 1
            continue
        if isinstance(r1, RunError) or isinstance(r2, RunError):
            report.discarded_error += 1
            continue
        assert isinstance(r1, Terminated) and isinstance(r2, Terminated)
        try:
            equivalent = low_equiv(r1.memory, r2.memory, g_fin, level, lat)
        except EvalError:
            report.discarded_error += 1
            continue
        if equivalent:
            report.passed += 1
        else:
            report.failed += 1
            if report.counterexample is None:
                report.counterexample = Counterexample(
                    i,
                    _first_divergent_var(r1.memory, r2.memory, g_fin, level, lat),
                    m1, m2, r1.memory, r2.memory,
                )
            if stop_at_first_failure:
                break
    report.verdict = "fail" if report.failed else "pass"
    return report


def transform_equivalence_outcome(
    cmd: Cmd,
    m0: Memory,
    max_steps: int = 10_000,
    transformed: tuple[dict[str, str], Cmd] | None = None,
) -> str:
    """One differential trial of the transformation: 'agree', 'discard' or 'disagree'.

    Pass ``transformed`` (the output of ``transform_program``) to amortize
    the transformation across several memories.  A step-limited source run
    discards the pair without running the transformed side.
    """
    r1 = run(cmd, m0, max_steps)
    if isinstance(r1, StepLimit):
        return "discard"
    a_final, ct = transformed if transformed is not None else transform_program(cmd)
    r2 = run(ct, m0, max_steps)
    if isinstance(r2, StepLimit):
        return "discard"
    if isinstance(r1, RunError) and isinstance(r2, RunError):
        return "discard"
    if isinstance(r1, RunError) or isinstance(r2, RunError):
        return "disagree"
    assert isinstance(r1, Terminated) and isinstance(r2, Terminated)
    source_view = {v: r1.memory[v] for v in a_final}
    return "agree" if project_memory(r2.memory, a_final) == source_view else "disagree"


def gen_well_typed(
    cfg: GenConfig,
    lat: Lattice,
    count: int,
    start_index: int = 0,
    max_candidates: int = 50_000,
    dependent_prob: float = 0.4,
) -> list[tuple[Cmd, LabelFile, CheckReport]]:
    """Checker-accepted random programs with their label files and reports."""
    out: list[tuple[Cmd, LabelFile, CheckReport]] = []
    index = start_index
    while len(out) < count and index < start_index + max_candidates:
        cmd = gen_program(cfg, index)
        label_file = LabelFile(entries=dict(gen_env(cfg, index, lat, dependent_prob)))
        index += 1
        try:
            report = check_program(cmd, label_file, lat)
        except IflowError:
            continue
        if report.accepted:
            out.append((cmd, label_file, report))
    if len(out) < count:
        raise ConfigError(
            f"could not collect {count} accepted programs within {max_candidates} candidates"
        )
    return out
