from pathlib import Path

import pytest

from iflow.lattice import two_point
from iflow.parser import parse_labels, parse_program

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def lat():
    return two_point()


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


def load_corpus(name, lattice):
    program = parse_program((CORPUS / f"{name}.while").read_text())
    labels = parse_labels((CORPUS / f"{name}.labels").read_text(), lattice)
    return program, labels


@pytest.fixture(scope="session")
def corpus_loader(lat):
    return lambda name: load_corpus(name, lat)
