"""Greedy extraction of (H, N, C) and the lossless-ness check."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .evaluate import Score, closure
from .graph import DependencyGraph, cover_cycles
from .kb import Fact, KnowledgeBase
from .rules import Rule, cost, fingerprint
from .search import RuleSearch, SearchConfig

log = logging.getLogger(__name__)


@dataclass
class ExtractionResult:
    H: list[Rule]
    N: frozenset[Fact]
    C: frozenset[Fact]
    original_size: int
    kb: KnowledgeBase | None = None
    scores: list[Score] = field(default_factory=list)
    cycle_cover: frozenset[Fact] = frozenset()
    graph: DependencyGraph | None = None

    @property
    def rule_cost(self) -> int:
        return sum(cost(r) for r in self.H)

    @property
    def accounting(self) -> dict[str, int]:
        n, c, h = len(self.N), len(self.C), self.rule_cost
        return {"B": self.original_size, "N": n, "C": c, "H": h, "total": n + c + h}

    @property
    def total(self) -> int:
        return self.accounting["total"]

    def summary(self) -> str:
        a = self.accounting
        ratio = a["total"] / a["B"] if a["B"] else 1.0
        return f"{a['B']} → {a['N']} + {a['C']} + {a['H']} (ratio {ratio:.2f})"


def _add_rows(tables: dict[str, np.ndarray], facts) -> None:
    by_rel: dict[str, list] = {}
    for f in facts:
        by_rel.setdefault(f.relation, []).append(f.args)
    for rel, rows in by_rel.items():
        new = np.array(rows, dtype=np.int64).reshape(len(rows), -1)
        old = tables.get(rel)
        tables[rel] = new if old is None else np.concatenate([old, new])


def extract(kb: KnowledgeBase, cfg: SearchConfig | None = None) -> ExtractionResult:
    """Add rules greedily until no candidate reaches ``cfg.min_delta``.

    Each candidate's counterexamples are rechecked against the full closure
    of what has been accepted so far (a new rule can chain off earlier
    ones), and it is dropped if the exact gain falls below the threshold.
    """
    cfg = cfg or SearchConfig()
    search = RuleSearch(kb, cfg)
    domain = range(kb.domain_size)
    graph = DependencyGraph(kb.facts)
    covered = np.zeros(len(kb), dtype=bool)
    H: list[Rule] = []
    scores: list[Score] = []
    seen: set[str] = set()
    counter: set[Fact] = set()
    cex: dict[str, np.ndarray] = {}
    derived = frozenset(kb.facts)

    while True:
        cand = search.find(covered, seen, graph, cex)
        if cand is None:
            break
        seen.add(cand.fingerprint)
        after = closure(derived, H + [cand.rule], domain)
        new_neg = after - derived
        c = cost(cand.rule)
        exact = Score(len(cand.proofs) - len(new_neg) - c, len(cand.proofs), len(new_neg), c)
        if exact.delta < cfg.min_delta or not cand.proofs:
            log.debug("dropped %s: exact delta %d", cand.fingerprint, exact.delta)
            continue
        rule_id = len(H)
        H.append(cand.rule)
        scores.append(exact)
        log.info("rule %d %s delta=%d", rule_id, cand.fingerprint, exact.delta)
        counter |= new_neg
        _add_rows(cex, new_neg)
        derived = after
        facts = kb.facts
        for g, body in cand.proofs.items():
            graph.add_proof(rule_id, facts[g], [facts[b] for b in body])
            covered[g] = True

    cc = frozenset(cover_cycles(graph))
    N = frozenset(graph.zero_in_degree()) | cc
    return ExtractionResult(H, N, frozenset(counter), len(kb), kb, scores, cc, graph)


@dataclass
class VerifyReport:
    ok: bool
    missing: frozenset[Fact]
    extra: frozenset[Fact]


def verify(original: KnowledgeBase, result: ExtractionResult) -> VerifyReport:
    """Does ``N`` with ``H`` derive exactly ``B`` plus the counterexamples?"""
    got = closure(result.N, result.H, range(original.domain_size))
    want = frozenset(original.facts) | result.C
    missing = want - got
    extra = got - want
    return VerifyReport(not missing and not extra, frozenset(missing), frozenset(extra))


def decompress(result: ExtractionResult, domain_size: int) -> frozenset[Fact]:
    return closure(result.N, result.H, range(domain_size)) - result.C


def rule_fingerprints(result: ExtractionResult) -> set[str]:
    return {fingerprint(r) for r in result.H}
