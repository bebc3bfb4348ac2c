import random

import pytest

from iflow.errors import AnalysisError
from iflow.harness import GenConfig, gen_program, random_memory, transform_equivalence_outcome
from iflow.interp import Terminated, run
from iflow.labels import project_memory
from iflow.lang import (
    Assign,
    BinOp,
    BracketAssign,
    Lit,
    Seq,
    Skip,
    Var,
    assignments_in_order,
    has_brackets,
    vars_of_cmd,
    vars_of_expr,
)
from iflow.parser import parse_program
from iflow.pretty import render_program
from iflow.transform import (
    FreshCounter,
    base_of,
    bracket_all,
    identity_active_set,
    phi_merge,
    set_assign,
    transform_cmd,
    transform_expr,
    transform_program,
)


def test_base_of():
    assert base_of("x@3") == "x"
    assert base_of("x") == "x"
    assert base_of("l1@2") == "l1"
    with pytest.raises(AnalysisError):
        base_of("x@")
    with pytest.raises(AnalysisError):
        base_of("@1")


def test_transform_expr_substitutes_active_copies():
    a = {"x": "x@1"}
    assert transform_expr(a, BinOp("+", Var("x"), Lit(1))) == BinOp("+", Var("x@1"), Lit(1))
    ident = {"x": "x", "y": "y"}
    e = BinOp("*", Var("x"), Var("y"))
    assert transform_expr(ident, e) == e
    a2 = {"y": "y@2", "z": "z"}
    assert transform_expr(a2, BinOp("*", Var("y"), Var("z"))) == BinOp("*", Var("y@2"), Var("z"))
    with pytest.raises(AnalysisError):
        transform_expr({"x": "x"}, Var("q"))


def test_phi_merge():
    fc = FreshCounter()
    a = {"x": "x@1", "y": "y"}
    assert phi_merge(a, dict(a), fc) == a

    fc = FreshCounter()
    assert fc.fresh("x") == "x@1"  # consume the first index
    merged = phi_merge({"x": "x"}, {"x": "x@1"}, fc)
    assert merged == {"x": "x@2"}

    fc = FreshCounter({"y@1"})
    merged = phi_merge({"x": "x@1", "y": "y"}, {"x": "x@1", "y": "y@1"}, fc)
    assert merged == {"x": "x@1", "y": "y@2"}


def test_set_assign():
    a = {"x": "x@1"}
    assert set_assign(a, dict(a)) == Skip()
    out = set_assign({"x": "x@2"}, {"x": "x@1"})
    assert out == Assign(None, "x@2", Var("x@1"))
    two = set_assign({"a": "a@1", "b": "b@1"}, {"a": "a", "b": "b"})
    assert two == Seq(Assign(None, "a@1", Var("a")), Assign(None, "b@1", Var("b")))


def test_transform_copy_reuse_golden():
    p = parse_program("x := h; [x := 0]; l := x;")
    a, ct = transform_program(p.cmd)
    expected = parse_program("x := h;\nx@1 := 0;\nl := x@1;")
    assert ct == expected.cmd
    assert a == {"x": "x@1", "h": "h", "l": "l"}


def test_transform_level_switch_golden():
    p = parse_program(
        "x := 0;\ny := 0;\nif (l1 < 0) { y := h; }\n[l1 := 1];\n"
        "if (l1 > 0) { x := y; }\nl2 := x;"
    )
    a, ct = transform_program(p.cmd)
    expected = parse_program(
        "x := 0;\ny := 0;\nif (l1 < 0) { y := h; }\nl1@1 := 1;\n"
        "if (l1@1 > 0) { x := y; }\nl2 := x;"
    )
    assert ct == expected.cmd
    assert a["l1"] == "l1@1"


def test_bracket_free_programs_transform_to_themselves(corpus_dir):
    for name in ("fig1a_nobracket", "fig1c", "fig5a", "fig6a", "fig6b", "fig14", "fig1b"):
        p = parse_program((corpus_dir / f"{name}.while").read_text())
        a, ct = transform_program(p.cmd, frozenset(p.init))
        assert ct == p.cmd, name
        assert all(a[v] == v for v in a), name


def test_bracket_free_random_programs_unchanged():
    cfg = GenConfig(seed=3, bracket_prob=0.0)
    for i in range(80):
        cmd = gen_program(cfg, i)
        assert not has_brackets(cmd)
        a, ct = transform_program(cmd)
        assert ct == cmd
        assert all(a[v] == v for v in a)


def test_transform_loop_golden():
    p = parse_program("[x := 0];\nwhile (x < 3) { [x := x + 1]; }")
    a, ct = transform_program(p.cmd)
    expected = parse_program(
        "x@1 := 0;\nx@3 := x@1;\nwhile (x@3 < 3) {\n  x@4 := x@3 + 1;\n  x@3 := x@4;\n}"
    )
    assert ct == expected.cmd
    assert a == {"x": "x@3"}
    # the throwaway first pass minted x@2; it must not appear in the output
    assert "x@2" not in vars_of_cmd(ct)


def test_loop_copy_executes_correctly():
    p = parse_program("[x := 0];\nwhile (x < 3) { [x := x + 1]; }")
    a, ct = transform_program(p.cmd)
    src = run(p.cmd, {})
    tgt = run(ct, {})
    assert isinstance(src, Terminated) and isinstance(tgt, Terminated)
    assert project_memory(tgt.memory, a) == {v: src.memory[v] for v in a}


def test_bracket_all():
    p = parse_program("x := 1;\nif (x) { y := 2; } else { skip; }")
    b = bracket_all(p.cmd)
    assert all(isinstance(s, BracketAssign) for s in assignments_in_order(b))
    assert bracket_all(b) == b
    assert bracket_all(Skip()) == Skip()


def test_fully_bracketed_copy_counts():
    # straight line: exactly one fresh copy per assignment
    p = parse_program("x := 1; y := x; x := y + 1;")
    a, ct = transform_program(bracket_all(p.cmd))
    minted = vars_of_cmd(ct) - vars_of_cmd(p.cmd)
    assert minted == {"x@1", "y@1", "x@2"}
    # a branch assigning x on one side adds one merge copy
    p2 = parse_program("if (c > 0) { x := 1; } else { skip; }")
    a2, ct2 = transform_program(bracket_all(p2.cmd))
    minted2 = vars_of_cmd(ct2) - vars_of_cmd(p2.cmd)
    assert minted2 == {"x@1", "x@2"}
    assert a2["x"] == "x@2"


def test_transformed_vars_stay_in_active_range():
    cfg = GenConfig(seed=13, bracket_prob=0.45)
    for i in range(60):
        cmd = gen_program(cfg, i)
        a, ct = transform_program(cmd)
        assert len(set(a.values())) == len(a)  # injective
        for s in assignments_in_order(ct):
            assert base_of(s.target) in a


def test_expression_value_preserved_random():
    # transformed expressions evaluate identically through the projection
    rng = random.Random(17)
    for _ in range(300):
        variables = ["x", "y", "z"]
        a = {}
        taken = set()
        for v in variables:
            copy = v if rng.random() < 0.5 else f"{v}@{rng.randint(1, 3)}"
            while copy in taken:
                copy = f"{v}@{rng.randint(1, 9)}"
            taken.add(copy)
            a[v] = copy
        e = _random_expr(rng, variables, 3)
        et = transform_expr(a, e)
        assert vars_of_expr(et) <= set(a.values())
        m_src = {v: rng.randint(-5, 5) for v in variables}
        m_tgt = {a[v]: m_src[v] for v in variables}
        from iflow.errors import EvalError
        from iflow.lang import eval_expr

        try:
            expected = eval_expr(m_src, e)
        except EvalError:
            continue
        assert eval_expr(m_tgt, et) == expected


def _random_expr(rng, variables, depth):
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.6:
            return Var(rng.choice(variables))
        return Lit(rng.randint(-4, 4))
    op = rng.choice(("+", "-", "*", "%", "<", "==", "&&"))
    return BinOp(op, _random_expr(rng, variables, depth - 1),
                 _random_expr(rng, variables, depth - 1))


def test_sync_assignments_preserve_projection_random():
    rng = random.Random(23)
    for _ in range(200):
        variables = ["a", "b", "c"]
        a1 = {}
        taken = set()
        for v in variables:
            copy = v if rng.random() < 0.5 else f"{v}@{rng.randint(1, 3)}"
            while copy in taken:
                copy = f"{v}@{rng.randint(1, 9)}"
            taken.add(copy)
            a1[v] = copy
        a2 = dict(a1)
        for v in variables:
            if rng.random() < 0.5:
                fresh = f"{v}@{rng.randint(4, 9)}"
                while fresh in taken:
                    fresh = f"{v}@{rng.randint(4, 99)}"
                taken.add(fresh)
                a2[v] = fresh
        m1 = {copy: rng.randint(-9, 9) for copy in a1.values()}
        for copy in a2.values():
            m1.setdefault(copy, 0)
        sync = set_assign(a2, a1)
        out = run(sync, m1, 100)
        assert isinstance(out, Terminated)
        assert project_memory(out.memory, a2) == project_memory(m1, a1)


def test_transformation_agreement_sampled():
    cfg = GenConfig(seed=41, bracket_prob=0.4)
    rng = random.Random(4)
    disagreements = 0
    compared = 0
    for i in range(120):
        cmd = gen_program(cfg, i)
        pre = transform_program(cmd)
        for _ in range(3):
            m = random_memory(cfg.variables, rng)
            out = transform_equivalence_outcome(cmd, m, 4000, transformed=pre)
            if out == "disagree":
                disagreements += 1
            elif out == "agree":
                compared += 1
    assert disagreements == 0
    assert compared > 200


def test_rendered_transform_carries_active_header():
    p = parse_program("x := h; [x := 0]; l := x;")
    a, ct = transform_program(p.cmd)
    text = render_program(ct, active=a)
    assert "#active x = x@1" in text
    assert "x@1 := 0;" in text
