import pytest

from iflow.errors import ConfigError, ParseError
from iflow.harness import GenConfig, gen_program
from iflow.labels import Cond, Level
from iflow.lang import (
    Assign,
    BinOp,
    BracketAssign,
    If,
    Lit,
    Seq,
    Skip,
    Var,
    While,
    assignments_in_order,
)
from iflow.lattice import two_point
from iflow.parser import parse_labels, parse_program
from iflow.pretty import render_label, render_program

LAT = two_point()


def test_copy_reuse_program_shape():
    p = parse_program("x := h; [x := 0]; l := x;")
    assert p.cmd == Seq(
        Assign(1, "x", Var("h")),
        Seq(BracketAssign(2, "x", Lit(0)), Assign(3, "l", Var("x"))),
    )


def test_skip():
    assert parse_program("skip;").cmd == Skip()


def test_one_armed_if_defaults_to_skip():
    p = parse_program("if (x > 0) { y := 1; }")
    assert p.cmd == If(BinOp(">", Var("x"), Lit(0)), Assign(1, "y", Lit(1)), Skip())


def test_precedence():
    p = parse_program("r := a || b && c == d + e * f;")
    expected = BinOp(
        "||",
        Var("a"),
        BinOp("&&", Var("b"),
              BinOp("==", Var("c"),
                    BinOp("+", Var("d"), BinOp("*", Var("e"), Var("f"))))),
    )
    assert p.cmd == Assign(1, "r", expected)


def test_parens_override():
    p = parse_program("r := (a + b) * c;")
    assert p.cmd == Assign(1, "r", BinOp("*", BinOp("+", Var("a"), Var("b")), Var("c")))


def test_unary_minus():
    p = parse_program("r := -x + -3;")
    assert p.cmd == Assign(1, "r", BinOp("+", BinOp("-", Lit(0), Var("x")), Lit(-3)))


def test_init_headers():
    p = parse_program("init x = 0;\ninit y = -5;\nskip;")
    assert p.init == {"x": 0, "y": -5}


def test_active_headers():
    p = parse_program("#active x = x@2\nx@2 := 1;")
    assert p.active == {"x": "x@2"}
    assert p.cmd == Assign(1, "x@2", Lit(1))


def test_comments_ignored():
    p = parse_program("# a comment\nx := 1; # trailing\n")
    assert p.cmd == Assign(1, "x", Lit(1))


def test_copy_names_accepted_plain_at_rejected():
    assert parse_program("x@1 := 0;").cmd == Assign(1, "x@1", Lit(0))
    with pytest.raises(ParseError, match="reserved"):
        parse_program("x@ := 0;")
    with pytest.raises(ParseError, match="reserved"):
        parse_program("@x := 0;")
    with pytest.raises(ParseError, match="reserved"):
        parse_program("x@1@2 := 0;")


def test_keywords_not_variables():
    with pytest.raises(ParseError):
        parse_program("if := 1;")
    with pytest.raises(ParseError):
        parse_program("x := skip;")


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_program("x := ;\n")
    assert "1:" in str(err.value)


def test_sites_in_textual_order():
    p = parse_program("a := 1;\nwhile (a < 3) { b := 2; a := a + 1; }\nc := 3;")
    assert [(s.site, s.target) for s in assignments_in_order(p.cmd)] == [
        (1, "a"), (2, "b"), (3, "a"), (4, "c"),
    ]


# -- label files ------------------------------------------------------------


def test_label_file_dependent_entry():
    lf = parse_labels("label y : (l1 < 0 ? H : L);", LAT)
    assert lf.entries["y"] == Cond(BinOp("<", Var("l1"), Lit(0)), Level("H"), Level("L"))


def test_label_file_default():
    lf = parse_labels("default : L;", LAT)
    assert lf.resolve({"a", "b"}) == {"a": Level("L"), "b": Level("L")}


def test_label_precedence_copy_over_base_over_default():
    lf = parse_labels("label x@1 : L; label x : H; default : L;", LAT)
    resolved = lf.resolve({"x", "x@1", "x@2", "q"})
    assert resolved["x@1"] == Level("L")
    assert resolved["x"] == Level("H")
    assert resolved["x@2"] == Level("H")
    assert resolved["q"] == Level("L")


def test_unlabeled_variable_without_default_rejected():
    lf = parse_labels("label x : H;", LAT)
    with pytest.raises(ConfigError, match="no label"):
        lf.resolve({"x", "y"})


def test_unknown_level_rejected():
    with pytest.raises(ConfigError, match="unknown level"):
        parse_labels("label x : M;", LAT)


def test_label_join_meet_syntax():
    lf = parse_labels("label a : L \\/ H; label b : H /\\ L;", LAT)
    assert render_label(lf.entries["a"]) == "L \\/ H"
    assert render_label(lf.entries["b"]) == "H /\\ L"


# -- round trips ------------------------------------------------------------


def test_render_parse_round_trip_corpus(corpus_dir):
    for path in sorted(corpus_dir.glob("*.while")):
        p = parse_program(path.read_text())
        text = render_program(p.cmd, active=p.active, init=p.init)
        q = parse_program(text)
        assert q.cmd == p.cmd, path.name
        assert q.init == p.init


def test_render_parse_round_trip_random():
    cfg = GenConfig(seed=2024)
    for i in range(250):
        cmd = gen_program(cfg, i)
        text = render_program(cmd)
        assert parse_program(text).cmd == cmd


def test_site_id_stability_under_rendering():
    cfg = GenConfig(seed=77)
    for i in range(60):
        cmd = gen_program(cfg, i)
        reparsed = parse_program(render_program(cmd)).cmd
        a = [(s.site, s.target) for s in assignments_in_order(cmd)]
        b = [(s.site, s.target) for s in assignments_in_order(reparsed)]
        assert a == b
