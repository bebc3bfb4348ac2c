import random

from iflow.harness import GenConfig, gen_program, random_memory
from iflow.interp import (
    Config,
    RunError,
    StepLimit,
    Terminated,
    debracket,
    erasure_run,
    run,
    step,
)
from iflow.labels import Cond, Level, project_memory
from iflow.lang import Assign, BinOp, BracketAssign, If, Lit, Seq, Skip, Var, While
from iflow.analysis import build_cfg, liveness
from iflow.lattice import two_point
from iflow.parser import parse_program
from iflow.transform import transform_program

LAT = two_point()


def test_while_unrolls_then_exits():
    loop = While(BinOp("<", Var("x"), Lit(1)), Skip())
    cfg = Config({"x": 1}, loop)
    cfg = step(cfg)
    assert isinstance(cfg.cmd, If)
    cfg = step(cfg)
    assert cfg.cmd == Skip()
    assert cfg.memory == {"x": 1}
    assert cfg.steps == 2


def test_bracket_steps_like_assignment():
    cfg = step(Config({"h": 7, "x": 0}, BracketAssign(1, "x", Var("h"))))
    assert cfg.memory == {"h": 7, "x": 7}
    assert cfg.cmd == Skip()


def test_skip_seq_step():
    cfg = step(Config({}, Seq(Skip(), Assign(1, "x", Lit(1)))))
    assert cfg.cmd == Assign(1, "x", Lit(1))


def test_copy_reuse_source_run():
    p = parse_program("x := h; [x := 0]; l := x;")
    out = run(p.cmd, {"h": 42})
    assert isinstance(out, Terminated)
    assert out.memory == {"h": 42, "x": 0, "l": 0}


def test_copy_reuse_transformed_run():
    p = parse_program("x := h;\nx@1 := 0;\nl := x@1;")
    out = run(p.cmd, {"h": 42})
    assert isinstance(out, Terminated)
    assert out.memory["x@1"] == 0 and out.memory["l"] == 0 and out.memory["x"] == 42


def test_step_limit():
    p = parse_program("while (1) { skip; }")
    assert isinstance(run(p.cmd, {}, 500), StepLimit)


def test_runtime_error_surfaces():
    p = parse_program("x := 1 % y;")
    out = run(p.cmd, {"y": 0})
    assert isinstance(out, RunError)
    assert "zero" in out.reason


def test_zero_initialization():
    p = parse_program("x := y + 1;")
    out = run(p.cmd)
    assert isinstance(out, Terminated)
    assert out.memory == {"x": 1, "y": 0}


def test_bracket_transparency_random():
    cfg = GenConfig(seed=31, bracket_prob=0.5)
    rng = random.Random(9)
    for i in range(150):
        cmd = gen_program(cfg, i)
        m = random_memory(cfg.variables, rng)
        r1 = run(cmd, m, 3000)
        r2 = run(debracket(cmd), m, 3000)
        assert type(r1) is type(r2)
        assert r1.steps == r2.steps
        assert r1.memory == r2.memory


def _erasure_setup(text, labels_env):
    from iflow.parser import LabelFile

    p = parse_program(text)
    a_final, ct = transform_program(p.cmd)
    env = LabelFile(entries=dict(labels_env), default=Level("L")).resolve(
        set(a_final) | set(a_final.values())
    )
    live = liveness(build_cfg(ct), env, a_final)
    return ct, a_final, env, live


def test_erasure_zeroes_dead_dependent_copy():
    # y's old copy dies once y@1 takes over; the write to x then clears it.
    text = "y := 7; [y := 0]; x := 1;"
    ct, a_final, env, live = _erasure_setup(
        text, {"y": Cond(BinOp(">", Var("x"), Lit(0)), Level("H"), Level("L"))}
    )
    plain = run(ct, {})
    erased = erasure_run(ct, {}, env, live.after)
    assert isinstance(plain, Terminated) and isinstance(erased, Terminated)
    assert plain.memory["y"] == 7
    assert erased.memory["y"] == 0  # zeroed at the x assignment
    assert project_memory(plain.memory, a_final) == project_memory(erased.memory, a_final)


def test_erasure_identity_without_dependent_labels():
    p = parse_program("a := 1; b := a + 2; a := b * b;")
    a_final, ct = transform_program(p.cmd)
    env = {v: Level("L") for v in set(a_final) | set(a_final.values())}
    live = liveness(build_cfg(ct), env, a_final)
    r1 = run(ct, {})
    r2 = erasure_run(ct, {}, env, live.after)
    assert isinstance(r1, Terminated) and isinstance(r2, Terminated)
    assert r1.memory == r2.memory


def test_loop_roundtrip_execution():
    p = parse_program("init s = 0;\ni := 0;\nwhile (i < 5) { s := s + i; i := i + 1; }")
    out = run(p.cmd, dict(p.init))
    assert isinstance(out, Terminated)
    assert out.memory["s"] == 10 and out.memory["i"] == 5
