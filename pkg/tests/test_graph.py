import random

import networkx as nx
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import RULE_1, RULE_2
from kbcompress.evaluate import ground
from kbcompress.graph import TOP, DependencyGraph, cover_cycles, strongly_connected_components
from kbcompress.kb import Fact
from kbcompress.rules import parse_rule


def digraph(n, edges):
    g = DependencyGraph(range(n))
    for a, b in edges:
        g.add_edge(a, b)
    return g


def random_digraph(rng, max_n=30):
    n = rng.randint(1, max_n)
    p = rng.choice([0.02, 0.05, 0.1, 0.2])
    edges = [(a, b) for a in range(n) for b in range(n) if rng.random() < p]
    return digraph(n, edges), n, edges


def as_nx(n, edges, drop=()):
    g = nx.DiGraph()
    g.add_nodes_from(v for v in range(n) if v not in drop)
    g.add_edges_from((a, b) for a, b in edges if a not in drop and b not in drop)
    return g


def test_rule_one_proofs(family):
    g = DependencyGraph(family.facts)
    ev = ground(parse_rule(RULE_1, family), family)
    assert g.add_proofs(0, ev) == 3
    assert len(g.edges()) == 6
    fjh = family.atom("father", "james", "harry")
    assert set(g.preds[fjh]) == {family.atom("parent", "james", "harry"), family.atom("male", "james")}
    assert g.proof_owner[fjh] == 0
    before = g.edges()
    assert g.add_proofs(1, ev) == 0
    assert g.edges() == before


def test_axiom_proof_comes_from_top():
    g = DependencyGraph([Fact("p", (0,))])
    g.add_proof(0, Fact("p", (0,)), ())
    assert g.edges() == [(TOP, Fact("p", (0,)))]
    assert g.zero_in_degree() == set()


def test_zero_in_degree_after_rules(family):
    g = DependencyGraph(family.facts)
    assert g.zero_in_degree() == set(family.facts)
    g.add_proofs(0, ground(parse_rule(RULE_1, family), family))
    g.add_proofs(1, ground(parse_rule(RULE_2, family), family))
    assert g.zero_in_degree() == {f for f in family.facts if f.relation in ("parent", "male", "female")}
    assert cover_cycles(g) == set()


def test_cover_cycles_examples():
    assert cover_cycles(digraph(3, [(0, 1), (1, 2)])) == set()
    cc = cover_cycles(digraph(2, [(0, 1), (1, 0)]))
    assert cc in ({0}, {1})
    figure_eight = digraph(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)])
    assert cover_cycles(figure_eight) == {0}
    assert cover_cycles(digraph(1, [(0, 0)])) == {0}


def test_scc_matches_networkx():
    rng = random.Random(3)
    for _ in range(30):
        g, n, edges = random_digraph(rng)
        ours = {frozenset(c) for c in strongly_connected_components(g, range(n))}
        theirs = {frozenset(c) for c in nx.strongly_connected_components(as_nx(n, edges))}
        assert ours == theirs


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_cover_breaks_every_cycle(seed):
    g, n, edges = random_digraph(random.Random(seed), max_n=12)
    cc = cover_cycles(g)
    assert nx.is_directed_acyclic_graph(as_nx(n, edges, cc))
    for cycle in nx.simple_cycles(as_nx(n, edges)):
        assert cc & set(cycle)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_marking_from_sources_and_cover_reaches_everything(seed):
    g, n, edges = random_digraph(random.Random(seed))
    seed_set = g.zero_in_degree() | cover_cycles(g)
    assert g.mark_provable(seed_set) == set(g.vertices)


def test_dump_format(family):
    g = DependencyGraph(family.facts)
    g.add_proof(7, family.facts[0], ())
    line = g.dump(family.format_fact)
    assert line == f"__top__\t{family.format_fact(family.facts[0])}\t7\n"
