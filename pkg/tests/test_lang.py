import pytest

from iflow.errors import EvalError
from iflow.lang import (
    Assign,
    BinOp,
    Lit,
    Seq,
    Skip,
    Var,
    assigned_vars,
    eval_expr,
    renumber_sites,
    vars_of_cmd,
    vars_of_expr,
)
from iflow.parser import parse_program


def ev(text, memory=None):
    prog = parse_program(f"r := {text};")
    assign = prog.cmd
    assert isinstance(assign, Assign)
    return eval_expr(memory or {}, assign.rhs)


def test_parity_check():
    assert ev("x % 2 == 0", {"x": 3}) == 0


def test_literal():
    assert ev("7") == 7


def test_logic_on_signs():
    assert ev("(a < 0) && (b > 0)", {"a": -2, "b": 5}) == 1


def test_comparisons_yield_bits():
    assert ev("3 < 5") == 1
    assert ev("3 >= 5") == 0
    assert ev("2 == 2") == 1
    assert ev("2 != 2") == 0


def test_logic_is_zero_nonzero():
    assert ev("7 && -3") == 1
    assert ev("7 && 0") == 0
    assert ev("0 || 12") == 1
    assert ev("0 || 0") == 0


def test_modulo_by_zero():
    with pytest.raises(EvalError, match="zero"):
        ev("1 % 0")


def test_overflow_detected():
    big = 2**62
    with pytest.raises(EvalError, match="overflow"):
        eval_expr({}, BinOp("*", Lit(big), Lit(4)))
    # within range is fine
    assert eval_expr({}, BinOp("+", Lit(big), Lit(1))) == big + 1


def test_unary_minus_forms():
    assert ev("-5") == -5
    assert ev("-x", {"x": 4}) == -4
    assert ev("x * -2", {"x": 3}) == -6


def test_var_helpers():
    p = parse_program("x := y + 1;\nif (z > 0) { w := 2; }")
    assert vars_of_cmd(p.cmd) == {"x", "y", "z", "w"}
    assert assigned_vars(p.cmd) == {"x", "w"}
    assert vars_of_expr(BinOp("+", Var("a"), Lit(1))) == {"a"}


def test_renumber_sites_textual_order():
    from iflow.lang import assignments_in_order

    p = parse_program("a := 1;\nif (a) { b := 2; } else { c := 3; }\nd := 4;")
    ordered = assignments_in_order(renumber_sites(p.cmd))
    assert [(a.site, a.target) for a in ordered] == [
        (1, "a"), (2, "b"), (3, "c"), (4, "d"),
    ]
