import random

import pytest

from iflow.errors import InternalError
from iflow.labels import (
    Cond,
    Join,
    Level,
    Meet,
    env_wellformed,
    label_eval,
    label_free_vars,
    low_equiv,
    project_env,
    project_memory,
)
from iflow.lang import BinOp, Lit, Var
from iflow.lattice import two_point

LAT = two_point()
H = Level("H")
L = Level("L")


def neg_guard(var):
    return BinOp("<", Var(var), Lit(0))


def test_cond_label_picks_branch():
    lbl = Cond(neg_guard("l1"), H, L)
    assert label_eval({"l1": -3}, lbl, LAT) == "H"
    assert label_eval({"l1": 2}, lbl, LAT) == "L"


def test_join_meet_eval():
    assert label_eval({}, Join(L, H), LAT) == "H"
    assert label_eval({}, Meet(L, H), LAT) == "L"


def test_free_vars():
    assert label_free_vars(Cond(neg_guard("l1"), H, L)) == {"l1"}
    assert label_free_vars(H) == frozenset()
    nested = Cond(BinOp(">", Var("x"), Lit(0)),
                  Cond(BinOp("==", Var("y"), Lit(1)), H, L), L)
    assert label_free_vars(nested) == {"x", "y"}


def parity(var):
    return BinOp("==", BinOp("%", Var(var), Lit(2)), Lit(0))


def test_wellformed_ok():
    g = {"y": Cond(parity("x"), H, L), "x": L, "h": H}
    assert env_wellformed(g, LAT) == []


def test_wellformed_level_violation():
    # in the guard-true case the dependency's level exceeds the label
    g = {"y": Cond(BinOp("==", Var("x"), Lit(1)), L, H), "x": H}
    violations = env_wellformed(g, LAT)
    assert any(v.var == "y" and v.dep == "x" for v in violations)


def test_wellformed_chain_violation():
    g = {
        "y": Cond(BinOp(">", Var("z"), Lit(0)), H, L),
        "z": Cond(BinOp(">", Var("w"), Lit(0)), H, L),
        "w": L,
    }
    violations = env_wellformed(g, LAT)
    assert any(v.var == "y" and v.dep == "z" and "variable-free" in v.reason
               for v in violations)


def test_wellformed_rules_out_self_dependence():
    g = {"x": Cond(BinOp(">", Var("x"), Lit(0)), H, L)}
    assert env_wellformed(g, LAT)


def test_project_memory():
    assert project_memory({"x": 1, "x@1": 0}, {"x": "x@1"}) == {"x": 0}
    mt = {"x": 5, "y@2": 7}
    assert project_memory(mt, {"x": "x", "y": "y@2"}) == {"x": 5, "y": 7}
    with pytest.raises(InternalError):
        project_memory({"x": 1}, {"x": "x@9"})


def test_project_env():
    gt = {"x": H, "x@1": L}
    assert project_env(gt, {"x": "x@1"}) == {"x": L}
    gt2 = {"y@2": Cond(neg_guard("l1"), H, L)}
    assert project_env(gt2, {"y": "y@2"}) == {"y": Cond(neg_guard("l1"), H, L)}


def test_low_equiv_basic():
    g = {"h": H, "l": L}
    assert low_equiv({"h": 1, "l": 0}, {"h": 9, "l": 0}, g, "L", LAT)
    assert not low_equiv({"h": 1, "l": 0}, {"h": 1, "l": 3}, g, "L", LAT)


def test_low_equiv_dependent():
    g = {"y": Cond(BinOp(">", Var("x"), Lit(0)), H, L), "x": L}
    m1 = {"x": 1, "y": 5}
    m2 = {"x": 1, "y": 9}
    assert low_equiv(m1, m2, g, "L", LAT)  # y is secret in both
    m3 = {"x": -1, "y": 5}
    m4 = {"x": -1, "y": 9}
    assert not low_equiv(m3, m4, g, "L", LAT)  # y is public and differs


def test_low_equiv_reflexive_symmetric_transitive_sampled():
    rng = random.Random(5)
    g = {"y": Cond(BinOp(">", Var("x"), Lit(0)), H, L), "x": L, "h": H}
    mems = [{v: rng.randint(-4, 4) for v in g} for _ in range(40)]
    for m in mems:
        assert low_equiv(m, m, g, "L", LAT)
    for m1 in mems[:12]:
        for m2 in mems[:12]:
            assert low_equiv(m1, m2, g, "L", LAT) == low_equiv(m2, m1, g, "L", LAT)
    for m1 in mems[:8]:
        for m2 in mems[:8]:
            for m3 in mems[:8]:
                if low_equiv(m1, m2, g, "L", LAT) and low_equiv(m2, m3, g, "L", LAT):
                    assert low_equiv(m1, m3, g, "L", LAT)


def test_label_eval_algebra_random():
    rng = random.Random(7)
    for _ in range(200):
        guard = BinOp(rng.choice(("<", ">", "==")), Var("a"), Lit(rng.randint(-2, 2)))
        t1 = Cond(guard, H, L)
        t2 = rng.choice((H, L, Cond(guard, L, H)))
        m = {"a": rng.randint(-3, 3)}
        joined = label_eval(m, Join(t1, t2), LAT)
        met = label_eval(m, Meet(t1, t2), LAT)
        assert joined == LAT.join(label_eval(m, t1, LAT), label_eval(m, t2, LAT))
        assert met == LAT.meet(label_eval(m, t1, LAT), label_eval(m, t2, LAT))
