"""Control-flow graph, liveness with label dependencies, and the fact generator.

Liveness here is the classic backward may-analysis with two twists required
by dependent labels: whenever a variable is used, the free variables of its
label count as used too (the label's level must stay computable), and the
live-out of the exit node is the range of the final active set, because
those copies are what the surrounding world observes.

The fact generator is deliberately shallow: branch conditions and
single-assignment equalities, invalidated whenever a mentioned variable is
reassigned.  Loops kill incoming facts that mention any variable assigned in
the body, which keeps every recorded fact true on all iterations without a
fixpoint over facts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

from .errors import InternalError
from .labels import Label, label_free_vars
from .lang import (
    Assign,
    BinOp,
    BracketAssign,
    Cmd,
    Expr,
    If,
    Seq,
    Skip,
    Var,
    While,
    assigned_vars,
    vars_of_expr,
)


# ---------------------------------------------------------------------------
# CFG


@dataclass
class CfgNode:
    nid: int
    kind: str  # "entry" | "final" | "assign" | "guard"
    succs: list[int] = field(default_factory=list)
    site: int | None = None
    target: str | None = None
    expr: Expr | None = None


@dataclass
class Cfg:
    nodes: list[CfgNode]
    entry: int
    final: int

    def node(self, nid: int) -> CfgNode:
        return self.nodes[nid]


def build_cfg(c: Cmd) -> Cfg:
    """Statement-level CFG; guards get their own nodes, loops a back edge."""
    nodes: list[CfgNode] = []

    def new(kind: str, **kw) -> int:
        nodes.append(CfgNode(nid=len(nodes), kind=kind, **kw))
        return nodes[-1].nid

    entry = new("entry")

    def wire(cmd: Cmd, preds: list[int]) -> list[int]:
        match cmd:
            case Skip():
                return preds
            case Seq(first, second):
                return wire(second, wire(first, preds))
            case Assign(site, target, rhs):
                nid = new("assign", site=site, target=target, expr=rhs)
                for p in preds:
                    nodes[p].succs.append(nid)
                return [nid]
            case BracketAssign():
                raise InternalError("CFGs are built for transformed programs only")
            case If(guard, then_branch, else_branch):
                g = new("guard", expr=guard)
                for p in preds:
                    nodes[p].succs.append(g)
                return wire(then_branch, [g]) + wire(else_branch, [g])
            case While(guard, body):
                g = new("guard", expr=guard)
                for p in preds:
                    nodes[p].succs.append(g)
                for b in wire(body, [g]):
                    nodes[b].succs.append(g)
                return [g]
        raise InternalError(f"not a command: {cmd!r}")

    exits = wire(c, [entry])
    final = new("final")
    for p in exits:
        nodes[p].succs.append(final)
    return Cfg(nodes, entry, final)


# ---------------------------------------------------------------------------
# Liveness


@dataclass
class LivenessMap:
    """Live variable sets before/after each assignment site (and guard nodes by id)."""

    before: dict[int, frozenset[str]]
    after: dict[int, frozenset[str]]
    node_in: dict[int, frozenset[str]]
    node_out: dict[int, frozenset[str]]


def _gen_for_expr(e: Expr, g: Mapping[str, Label]) -> frozenset[str]:
    used = vars_of_expr(e)
    out = set(used)
    for v in used:
        lbl = g.get(v)
        if lbl is not None:
            out |= label_free_vars(lbl)
    return frozenset(out)


def liveness(cfg: Cfg, g: Mapping[str, Label], a_final: Mapping[str, str]) -> LivenessMap:
    """Least fixpoint of the backward live-variable equations."""
    n = len(cfg.nodes)
    gens: list[frozenset[str]] = []
    kills: list[frozenset[str]] = []
    for node in cfg.nodes:
        if node.kind == "assign":
            assert node.expr is not None and node.target is not None
            gens.append(_gen_for_expr(node.expr, g))
            kills.append(frozenset((node.target,)))
        elif node.kind == "guard":
            assert node.expr is not None
            gens.append(_gen_for_expr(node.expr, g))
            kills.append(frozenset())
        else:
            gens.append(frozenset())
            kills.append(frozenset())

    live_in: list[frozenset[str]] = [frozenset()] * n
    live_out: list[frozenset[str]] = [frozenset()] * n
    seed = frozenset(a_final.values())
    live_out[cfg.final] = seed
    live_in[cfg.final] = seed

    var_count = max(1, len({v for s in gens for v in s} | set(seed)
                           | {v for s in kills for v in s}))
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        if rounds > n * var_count + 2:
            raise InternalError("liveness failed to reach a fixpoint within its bound")
        for node in reversed(cfg.nodes):
            if node.nid == cfg.final:
                continue
            out = frozenset().union(*(live_in[s] for s in node.succs)) if node.succs else frozenset()
            inn = gens[node.nid] | (out - kills[node.nid])
            if out != live_out[node.nid] or inn != live_in[node.nid]:
                live_out[node.nid] = out
                live_in[node.nid] = inn
                changed = True

    before: dict[int, frozenset[str]] = {}
    after: dict[int, frozenset[str]] = {}
    for node in cfg.nodes:
        if node.kind == "assign":
            assert node.site is not None, "assignment sites must be numbered before liveness"
            before[node.site] = live_in[node.nid]
            after[node.site] = live_out[node.nid]
    return LivenessMap(
        before,
        after,
        {nd.nid: live_in[nd.nid] for nd in cfg.nodes},
        {nd.nid: live_out[nd.nid] for nd in cfg.nodes},
    )


# ---------------------------------------------------------------------------
# Facts


@dataclass(frozen=True)
class TruthFact:
    """The expression evaluated to nonzero (truth=True) or zero (truth=False)."""

    expr: Expr
    truth: bool


@dataclass(frozen=True)
class EqFact:
    """``var`` currently holds the value of ``expr`` (recorded at its assignment)."""

    var: str
    expr: Expr


Fact = Union[TruthFact, EqFact]
FactSet = frozenset  # frozenset[Fact]


def fact_vars(f: Fact) -> frozenset[str]:
    match f:
        case TruthFact(expr, _):
            return vars_of_expr(expr)
        case EqFact(var, expr):
            return frozenset((var,)) | vars_of_expr(expr)
    raise InternalError(f"not a fact: {f!r}")


def fact_as_atom(f: Fact) -> tuple[Expr, bool]:
    """View a fact as (expression, asserted truth) for solvers."""
    match f:
        case TruthFact(expr, truth):
            return expr, truth
        case EqFact(var, expr):
            return BinOp("==", Var(var), expr), True
    raise InternalError(f"not a fact: {f!r}")


def _kill(facts: frozenset, var: str) -> frozenset:
    return frozenset(f for f in facts if var not in fact_vars(f))


def _kill_many(facts: frozenset, variables: frozenset[str]) -> frozenset:
    return frozenset(f for f in facts if not (fact_vars(f) & variables))


def predicates(c: Cmd) -> dict[int, FactSet]:
    """Facts guaranteed to hold just before each assignment site."""
    at_site: dict[int, FactSet] = {}

    def walk(cmd: Cmd, facts: frozenset) -> frozenset:
        match cmd:
            case Skip():
                return facts
            case Seq(first, second):
                return walk(second, walk(first, facts))
            case Assign(site, target, rhs):
                if site is None:
                    raise InternalError("assignment sites must be numbered before fact generation")
                at_site[site] = facts
                facts = _kill(facts, target)
                if target not in vars_of_expr(rhs):
                    facts = facts | {EqFact(target, rhs)}
                return facts
            case BracketAssign():
                raise InternalError("facts are generated for transformed programs only")
            case If(guard, then_branch, else_branch):
                f1 = walk(then_branch, facts | {TruthFact(guard, True)})
                f2 = walk(else_branch, facts | {TruthFact(guard, False)})
                return f1 & f2
            case While(guard, body):
                stable = _kill_many(facts, assigned_vars(body))
                walk(body, stable | {TruthFact(guard, True)})
                return stable | {TruthFact(guard, False)}
        raise InternalError(f"not a command: {cmd!r}")

    walk(c, frozenset())
    return at_site
