import random

import pytest

from kbcompress.kb import KnowledgeBase, parse_kb
from kbcompress.vc import graph_to_kb, parse_graph

FAMILY_TSV = """\
parent\tjames\tharry
parent\tlily\tharry
parent\tharry\tsirius
parent\tharry\talbus
parent\tginny\tsirius
parent\tginny\talbus
father\tjames\tharry
father\tharry\tsirius
father\tharry\talbus
mother\tlily\tharry
mother\tginny\tsirius
mother\tginny\talbus
male\tjames
male\tharry
male\talbus
male\tsirius
female\tlily
female\tginny
"""

STAR_GRAPH = "3 2\n1 2\n1 3\n"

RULE_1 = "father(X,Y) :- parent(X,Y), male(X)."
RULE_2 = "mother(X,Y) :- parent(X,Y), female(X)."


def random_kb(rng: random.Random, max_facts=50, max_relations=5, max_arity=2, n_constants=None) -> KnowledgeBase:
    """Uniform random facts over a random signature; the domain is declared up front."""
    n_rel = rng.randint(1, max_relations)
    rels = [(f"r{i}", rng.randint(1, max_arity)) for i in range(n_rel)]
    nc = n_constants or rng.randint(1, 8)
    consts = [f"k{i}" for i in range(nc)]
    atoms = []
    for _ in range(rng.randint(0, max_facts)):
        name, arity = rng.choice(rels)
        atoms.append((name, [rng.choice(consts) for _ in range(arity)]))
    return KnowledgeBase.from_atoms(atoms, consts, rels)


@pytest.fixture
def family():
    return parse_kb(FAMILY_TSV)


@pytest.fixture
def star_graph():
    return parse_graph(STAR_GRAPH)


@pytest.fixture
def star(star_graph):
    return graph_to_kb(star_graph)


def tiny_kb(rng: random.Random) -> KnowledgeBase:
    """At most 12 facts, 2-3 mostly unary relations, with planted overlaps.

    Later relations copy (a prefix of) earlier facts' arguments with some
    noise, so there is something for rules to find.
    """
    consts = [f"k{i}" for i in range(rng.randint(2, 4))]
    rels = [(f"r{i}", 1 if rng.random() < 0.6 else 2) for i in range(rng.randint(2, 3))]
    atoms = set()
    name, arity = rels[0]
    for _ in range(rng.randint(2, 6)):
        atoms.add((name, tuple(rng.choice(consts) for _ in range(arity))))
    for name, arity in rels[1:]:
        for _, args in sorted(atoms):
            if rng.random() < 0.7:
                atoms.add((name, tuple((list(args) + [rng.choice(consts)])[:arity])))
        for _ in range(rng.randint(0, 2)):
            atoms.add((name, tuple(rng.choice(consts) for _ in range(arity))))
    return KnowledgeBase.from_atoms(sorted(atoms)[:12], consts, rels)


REPORT: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for n in sorted(REPORT):
            terminalreporter.write_line(REPORT[n])
