"""The classic floating-level system and the type construction that matches it.

``hs_check`` computes, for each variable, the level it floats to after a
command; it never rejects.  ``construct_env`` replays that computation in
lock-step with the copy-introducing transformation of a fully bracketed
program, producing a fixed-level environment for the transformed program.
``verify_construction`` then runs the ordinary checker (levels-only) on the
result, which is the machine check that the construction is always typable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError, InternalError
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
from .labels import Level
from .lattice import Lattice
from .transform import ActiveSet, FreshCounter, phi_merge, set_assign, transform_cmd, transform_expr

HsEnv = dict[str, str]


def hs_type(g: HsEnv, e: Expr, lat: Lattice) -> str:
    match e:
        case Lit():
            return lat.bottom
        case Var(name):
            try:
                return g[name]
            except KeyError:
                raise ConfigError(f"variable '{name}' has no initial level") from None
        case BinOp(_, left, right):
            return lat.join(hs_type(g, left, lat), hs_type(g, right, lat))
    raise InternalError(f"not an expression: {e!r}")


def _env_join(g1: HsEnv, g2: HsEnv, lat: Lattice) -> HsEnv:
    if g1.keys() != g2.keys():
        raise InternalError("environments with different domains cannot be joined")
    return {v: lat.join(g1[v], g2[v]) for v in g1}


def hs_check(pc: str, g: HsEnv, c: Cmd, lat: Lattice) -> HsEnv:
    """Final floating levels after ``c``; brackets are ordinary assignments here.

    Loops iterate the body transfer joined with the incoming environment
    until stable; the lattice is finite and the transfer monotone, so the
    iteration cap is only a tripwire.
    """
    match c:
        case Skip():
            return g
        case Seq(first, second):
            return hs_check(pc, hs_check(pc, g, first, lat), second, lat)
        case Assign(_, target, rhs) | BracketAssign(_, target, rhs):
            out = dict(g)
            out[target] = lat.join(pc, hs_type(g, rhs, lat))
            return out
        case If(guard, then_branch, else_branch):
            inner = lat.join(pc, hs_type(g, guard, lat))
            return _env_join(
                hs_check(inner, g, then_branch, lat),
                hs_check(inner, g, else_branch, lat),
                lat,
            )
        case While(guard, body):
            cur = g
            for _ in range(len(g) * len(lat.elements) + 2):
                inner = lat.join(pc, hs_type(cur, guard, lat))
                after_body = hs_check(inner, cur, body, lat)
                nxt = _env_join(after_body, g, lat)
                if nxt == cur:
                    return cur
                cur = nxt
            raise InternalError("loop level iteration exceeded its bound")
    raise InternalError(f"not a command: {c!r}")


# ---------------------------------------------------------------------------
# Type construction for transformed programs


@dataclass
class ConstructedEnv:
    """Levels for the transformed program plus how each binding arose."""

    types: dict[str, str]
    provenance: dict[str, str]
    conflicts: list[tuple[str, str, str]] = field(default_factory=list)


def _require_fully_bracketed(c: Cmd) -> None:
    match c:
        case Assign():
            raise ConfigError("type construction expects a fully bracketed program "
                              "(apply bracket_all first)")
        case Seq(first, second):
            _require_fully_bracketed(first)
            _require_fully_bracketed(second)
        case If(_, t, e):
            _require_fully_bracketed(t)
            _require_fully_bracketed(e)
        case While(_, body):
            _require_fully_bracketed(body)
        case _:
            pass


def _gamma_on(g: HsEnv, a: ActiveSet, rule: str) -> dict[str, tuple[str, str]]:
    return {copy: (g[src], rule) for src, copy in a.items()}


def construct_env(
    pc: str,
    g: HsEnv,
    a: ActiveSet,
    c: Cmd,
    lat: Lattice,
) -> tuple[HsEnv, ActiveSet, Cmd, ConstructedEnv]:
    """Construct levels for the transformation of fully bracketed ``c``.

    Returns the floating-level environment and active set after ``c``, the
    transformed program, and the constructed fixed-level environment.  Fresh
    copies are allocated in the same order as the plain transformation, so
    both paths name copies identically.
    """
    _require_fully_bracketed(c)
    missing = sorted(vars_of_cmd(c) - set(a))
    if missing:
        raise ConfigError("no initial level for variable(s) " + ", ".join(missing))
    fc = FreshCounter(set(a) | set(a.values()))
    conflicts: list[tuple[str, str, str]] = []

    def gmerge(*envs: dict[str, tuple[str, str]]) -> dict[str, tuple[str, str]]:
        out: dict[str, tuple[str, str]] = {}
        for env in envs:
            for var, (lvl, rule) in env.items():
                if var not in out:
                    out[var] = (lvl, rule)
                elif out[var][0] != lvl:
                    conflicts.append((var, out[var][0], lvl))
        return out

    def rec(pc: str, g: HsEnv, a: ActiveSet, cmd: Cmd):
        match cmd:
            case Skip():
                return g, a, Skip(), _gamma_on(g, a, "skip")
            case Seq(first, second):
                g1, a1, t1, gt1 = rec(pc, g, a, first)
                g2, a2, t2, gt2 = rec(pc, g1, a1, second)
                return g2, a2, Seq(t1, t2), gmerge(gt1, gt2)
            case BracketAssign(site, target, rhs):
                rhs_t = transform_expr(a, rhs)
                level = lat.join(pc, hs_type(g, rhs, lat))
                copy = fc.fresh(target)
                g1 = dict(g)
                g1[target] = level
                a1 = dict(a)
                a1[target] = copy
                gt = _gamma_on(g, a, "assign")
                gt[copy] = (level, "assign")
                return g1, a1, Assign(site, copy, rhs_t), gt
            case If(guard, then_branch, else_branch):
                guard_t = transform_expr(a, guard)
                inner = lat.join(pc, hs_type(g, guard, lat))
                g1, a1, t1, gt1 = rec(inner, g, a, then_branch)
                g2, a2, t2, gt2 = rec(inner, g, a, else_branch)
                a3 = phi_merge(a1, a2, fc)
                g3 = _env_join(g1, g2, lat)
                ct = If(
                    guard_t,
                    seq(t1, set_assign(a3, a1)),
                    seq(t2, set_assign(a3, a2)),
                )
                return g3, a3, ct, gmerge(gt1, gt2, _gamma_on(g3, a3, "branch-merge"))
            case While(guard, body):
                g_fix = hs_check(pc, g, cmd, lat)
                a1, _ = transform_cmd(a, body, fc)
                a2 = phi_merge(a, a1, fc)
                guard_t = transform_expr(a2, guard)
                inner = lat.join(pc, hs_type(g_fix, guard, lat))
                g_body, a3, body_t, gt0 = rec(inner, g_fix, a2, body)
                if _env_join(g_body, g, lat) != g_fix:
                    raise InternalError("loop environment is not the expected fixpoint")
                ct = seq(
                    set_assign(a2, a),
                    While(guard_t, seq(body_t, set_assign(a2, a3))),
                )
                return g_fix, a2, ct, gmerge(gt0, _gamma_on(g, a, "loop-entry"))
            case Assign():
                raise ConfigError("type construction expects a fully bracketed program")
        raise InternalError(f"not a command: {cmd!r}")

    g_out, a_out, ct, gt = rec(pc, g, a, c)
    types = {v: lvl for v, (lvl, _) in gt.items()}
    provenance = {v: rule for v, (_, rule) in gt.items()}
    return g_out, a_out, renumber_sites(ct), ConstructedEnv(types, provenance, conflicts)


@dataclass
class VerifyReport:
    ok: bool
    domain_ok: bool
    coverage_missing: list[str]
    violated_sites: list[int]
    side_failure_sites: list[int]
    conflicts: list[tuple[str, str, str]]


def verify_construction(
    gt: ConstructedEnv,
    ct: Cmd,
    pc: str,
    a_final: ActiveSet,
    lat: Lattice,
    a_initial: ActiveSet,
) -> tuple[bool, VerifyReport]:
    """Machine check: the constructed environment types the constructed program.

    Runs the ordinary checker in levels-only form (all labels are bare
    levels, so well-formedness and the liveness side condition are trivial)
    and checks the domain bound: constructed bindings only cover the initial
    copies and the fresh variables of the transformed program.
    """
    from .analysis import build_cfg, liveness, predicates
    from .typecheck import check_cmd

    initial_copies = set(a_initial.values())
    fresh = vars_of_cmd(ct) - initial_copies
    domain_ok = set(gt.types) <= initial_copies | fresh

    needed = vars_of_cmd(ct) | set(a_final.values())
    coverage_missing = sorted(needed - set(gt.types))
    if coverage_missing:
        return False, VerifyReport(False, domain_ok, coverage_missing, [], [],
                                   list(gt.conflicts))

    env = {v: Level(lvl) for v, lvl in gt.types.items()}
    ct = renumber_sites(ct)
    cfg = build_cfg(ct)
    live = liveness(cfg, env, a_final)
    facts = predicates(ct)
    obligations, side_failures = check_cmd(env, lat, Level(pc), ct, facts, live)
    violated = [o.site for o in obligations if o.status != "valid"]
    side_sites = [s.site for s in side_failures]
    ok = domain_ok and not violated and not side_sites
    return ok, VerifyReport(ok, domain_ok, [], violated, side_sites, list(gt.conflicts))
