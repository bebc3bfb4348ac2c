import itertools

import pytest

from iflow.errors import ConfigError
from iflow.lattice import Lattice, two_point
from iflow.parser import parse_lattice


def diamond():
    return Lattice(("bot", "A", "B", "top"),
                   (("bot", "A"), ("bot", "B"), ("A", "top"), ("B", "top")))


def chain3():
    return Lattice(("a", "b", "c"), (("a", "b"), ("b", "c")))


def m3():
    return Lattice(("bot", "a", "b", "c", "top"),
                   (("bot", "a"), ("bot", "b"), ("bot", "c"),
                    ("a", "top"), ("b", "top"), ("c", "top")))


def test_two_point_basics():
    lat = two_point()
    assert lat.leq("L", "H")
    assert not lat.leq("H", "L")
    assert lat.join("L", "H") == "H"
    assert lat.meet("L", "H") == "L"
    assert lat.leq("H", "H")
    assert lat.join("H", "H") == "H"
    assert lat.meet("H", "H") == "H"
    assert lat.bottom == "L" and lat.top == "H"


def test_diamond_incomparable():
    lat = diamond()
    assert not lat.leq("A", "B")
    assert not lat.leq("B", "A")
    assert lat.join("A", "B") == "top"
    assert lat.meet("A", "B") == "bot"


def test_unknown_level():
    lat = two_point()
    with pytest.raises(ConfigError):
        lat.leq("L", "M")
    with pytest.raises(ConfigError):
        lat.join("M", "L")


def test_parse_lattice_two_point():
    lat = parse_lattice("levels: L H;\norder: L < H;")
    assert lat.leq("L", "H") and not lat.leq("H", "L")


def test_parse_lattice_one_point():
    lat = parse_lattice("levels: A;")
    assert lat.bottom == "A" and lat.top == "A"
    assert lat.join("A", "A") == "A"


def test_parse_lattice_no_join_rejected():
    with pytest.raises(ConfigError, match="no join"):
        parse_lattice("levels: A B;\norder: ;")


def test_cycle_rejected():
    with pytest.raises(ConfigError, match="antisymmetric"):
        Lattice(("a", "b"), (("a", "b"), ("b", "a")))


def test_unknown_level_in_order():
    with pytest.raises(ConfigError):
        parse_lattice("levels: A;\norder: A < Z;")


@pytest.mark.parametrize("make", [two_point, diamond, chain3, m3])
def test_lattice_algebra_exhaustive(make):
    lat = make()
    els = lat.elements
    for a, b in itertools.product(els, repeat=2):
        assert lat.join(a, b) == lat.join(b, a)
        assert lat.meet(a, b) == lat.meet(b, a)
        assert lat.join(a, a) == a
        assert lat.meet(a, a) == a
        # order agrees with join and meet
        assert lat.leq(a, b) == (lat.join(a, b) == b)
        assert lat.leq(a, b) == (lat.meet(a, b) == a)
        assert lat.leq(lat.bottom, a) and lat.leq(a, lat.top)
    for a, b, c in itertools.product(els, repeat=3):
        assert lat.join(lat.join(a, b), c) == lat.join(a, lat.join(b, c))
        assert lat.meet(lat.meet(a, b), c) == lat.meet(a, lat.meet(b, c))
