"""Vertex cover to compression reduction, plus brute-force oracles.

``graph_to_kb`` builds the KB whose optimal compression encodes a minimum
vertex cover: every edge (i, j) becomes two constants carrying ``edge``,
``v<i>`` and ``v<j>`` facts, ``2m + 1`` extra ``edge`` facts make
``edge(X) :- .`` barely unprofitable, and ``4m + 1`` fact-less padding
constants turn its would-be gain into counterexamples.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable

from .evaluate import ground
from .extract import ExtractionResult
from .graph import DependencyGraph
from .kb import Fact, KBParseError, KnowledgeBase, Relation
from .naive import naive_closure
from .rules import Rule, cost, enumerate_rules, fingerprint, is_ground_axiom

MAX_VC_VERTICES = 20
MAX_COMPRESS_FACTS = 12
MAX_COMPRESS_SUBSETS = 2**16


@dataclass(frozen=True)
class UndirectedGraph:
    n: int
    edges: tuple[tuple[int, int], ...]  # 1-based, i < j

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be >= 0")
        norm = []
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge ({i}, {j}) outside 1..{self.n}")
            norm.append((min(i, j), max(i, j)))
        if len(set(norm)) != len(norm):
            raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", tuple(norm))

    def degree(self, v: int) -> int:
        return sum(v in e for e in self.edges)

    def is_cover(self, vs: Iterable[int]) -> bool:
        vs = set(vs)
        return all(i in vs or j in vs for i, j in self.edges)


def parse_graph(text: str) -> UndirectedGraph:
    """``n m`` on the first line, then ``m`` lines ``i j`` (1-based)."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 2:
        raise KBParseError("graph header must be 'n m'", 1)
    try:
        n, m = (int(x) for x in lines[0])
        edges = [(int(a), int(b)) for a, b in lines[1:]]
    except ValueError as e:
        raise KBParseError(f"bad graph line: {e}") from None
    if len(edges) != m:
        raise KBParseError(f"header announces {m} edges, found {len(edges)}")
    try:
        return UndirectedGraph(n, tuple(edges))
    except ValueError as e:
        raise KBParseError(str(e)) from None


def edge_constants(i: int, j: int) -> tuple[str, str]:
    return f"e_{i}_{j}", f"ep_{i}_{j}"


def graph_to_kb(g: UndirectedGraph) -> KnowledgeBase:
    m = len(g.edges)
    constants: list[str] = []
    atoms: list[tuple[str, tuple[str]]] = []
    for i, j in g.edges:
        e, ep = edge_constants(i, j)
        constants += [e, ep]
        atoms += [("edge", (e,)), ("edge", (ep,))]
        atoms += [(f"v{i}", (e,)), (f"v{i}", (ep,)), (f"v{j}", (e,)), (f"v{j}", (ep,))]
    cs = [f"c_{k}" for k in range(1, 2 * m + 2)]
    constants += cs
    atoms += [("edge", (c,)) for c in cs]
    constants += [f"d_{k}" for k in range(1, 4 * m + 2)]
    relations = [(f"v{i}", 1) for i in range(1, g.n + 1)] + [("edge", 1)]
    return KnowledgeBase.from_atoms(atoms, constants, relations)


_VERTEX = re.compile(r"v([1-9][0-9]*)$")


def cover_from_rules(rules: Iterable[Rule]) -> set[int]:
    """Vertices ``i`` with a rule ``edge(X) :- v<i>(X)`` among ``rules``."""
    out = set()
    for r in rules:
        if len(r.preds) != 2 or r.preds[0] != "edge":
            continue
        m = _VERTEX.match(r.preds[1])
        if m and fingerprint(r) == f"edge(0):-{r.preds[1]}(0)":
            out.add(int(m.group(1)))
    return out


def brute_force_vertex_cover(g: UndirectedGraph) -> set[int]:
    """Smallest cover; among equal sizes the lexicographically first."""
    if g.n > MAX_VC_VERTICES:
        raise ValueError(f"brute-force vertex cover is limited to {MAX_VC_VERTICES} vertices")
    for k in range(g.n + 1):
        for vs in itertools.combinations(range(1, g.n + 1), k):
            if g.is_cover(vs):
                return set(vs)
    return set(range(1, g.n + 1))  # pragma: no cover


# exact compression ---------------------------------------------------------------


def candidate_pool(kb: KnowledgeBase, max_len: int) -> list[Rule]:
    """Rules that could appear in some optimal extraction.

    A rule whose positive evidence does not exceed its cost can be dropped
    from any extraction without making it larger (its heads move to N
    instead), so it is left out.
    """
    pool = []
    for r in enumerate_rules(kb.relations.values(), max_len, kb.position_constants()):
        if is_ground_axiom(r):
            continue
        if ground(r, kb).n_positive > cost(r):
            pool.append(r)
    return pool


def _min_generators(B: frozenset[Fact], rules: list[Rule], domain: range) -> frozenset[Fact] | None:
    """Smallest N within B whose closure contains B."""
    order = sorted(B)
    forced = [f for f in order if f not in naive_closure(B - {f}, rules, domain)]
    rest = [f for f in order if f not in set(forced)]
    for k in range(len(rest) + 1):
        for extra in itertools.combinations(rest, k):
            n = frozenset(forced) | frozenset(extra)
            if B <= naive_closure(n, rules, domain):
                return n
    return None  # pragma: no cover - N = B always works


def brute_force_compress(kb: KnowledgeBase, max_len: int = 2) -> ExtractionResult:
    """Exact minimum of ``|N| + |C| + |H|`` over rule sets from :func:`candidate_pool`.

    For a fixed H every valid N has the same closure, namely that of B, so C
    is fixed and N is the smallest generating subset of B.
    """
    if max_len > 2:
        raise ValueError("brute_force_compress supports max_len <= 2")
    if len(kb) > MAX_COMPRESS_FACTS:
        raise ValueError(f"brute_force_compress is limited to {MAX_COMPRESS_FACTS} facts")
    pool = candidate_pool(kb, max_len)
    if 2 ** len(pool) > MAX_COMPRESS_SUBSETS:
        raise ValueError(f"{len(pool)} candidate rules exceed the subset limit")
    B = frozenset(kb.facts)
    domain = range(kb.domain_size)
    best = (len(B), (), B, frozenset())
    for k in range(1, len(pool) + 1):
        for H in itertools.combinations(pool, k):
            h_cost = sum(cost(r) for r in H)
            if h_cost >= best[0]:
                continue
            C = naive_closure(B, H, domain) - B
            if h_cost + len(C) >= best[0]:
                continue
            N = _min_generators(B, list(H), domain)
            total = h_cost + len(C) + len(N)
            if total < best[0]:
                best = (total, H, N, C)
    _, H, N, C = best
    return ExtractionResult(list(H), frozenset(N), frozenset(C), len(B), kb, graph=DependencyGraph())
