"""Top-down beam search for the single best rule to add next."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .evaluate import Evidence, Score, ground
from .graph import DependencyGraph
from .kb import Fact, KnowledgeBase
from .rules import Rule, cost, extend_with_fingerprints, fingerprint, is_ground_axiom, length, new_head_rule


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int | None = 5  # None: keep every candidate
    max_rule_length: int = 4
    min_delta: int = 0
    target_relations: frozenset[str] | None = None

    def __post_init__(self):
        if self.beam_width is not None and self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_rule_length < 1:
            raise ValueError("max_rule_length must be >= 1")
        if self.target_relations is not None:
            object.__setattr__(self, "target_relations", frozenset(self.target_relations))


class Candidate(NamedTuple):
    rule: Rule
    evidence: Evidence
    score: Score
    fingerprint: str
    proofs: dict[int, tuple[int, ...]]  # global fact id -> body fact ids


@dataclass
class _Scored:
    rule: Rule
    fp: str
    length: int
    raw_new: int  # positives not covered yet
    negative: int
    cost: int
    upper: int  # delta if every uncovered positive got a proof
    bound: int  # best delta any extension could still reach
    score: Score | None = None  # exact, only computed when it could win
    proofs: dict = field(default_factory=dict)


def acyclic_proofs(
    evidence: Evidence,
    covered: np.ndarray,
    graph: DependencyGraph | None = None,
) -> dict[int, tuple[int, ...]]:
    """Proofs for the not-yet-covered positives that keep ``graph`` acyclic.

    Facts are taken in id order. Each gets its first grounding whose body
    facts it does not already (transitively) support; facts with no such
    grounding are left out. Without a graph only cycles among the new proofs
    themselves are avoided.
    """
    new_idx = np.flatnonzero(~covered[evidence.pos_gid])
    gids = evidence.pos_gid[new_idx]
    first = evidence.first_grounding_gids(evidence.pos_slot[new_idx])
    plain = {int(g): tuple(row) for g, row in zip(gids.tolist(), first.tolist())}
    if first.shape[1] == 0 or len(gids) == 0:
        return plain
    if graph is None:
        graph = DependencyGraph()
    risky = covered[first].any(axis=1) | np.isin(first, gids).any(axis=1)
    if not risky.any():
        return plain
    facts = evidence.kb.facts
    extra: dict[Fact, list[Fact]] = {}
    out: dict[int, tuple[int, ...]] = {}
    for g in gids.tolist():
        h = facts[g]
        body = plain[g]
        if graph.reaches(h, {facts[b] for b in body}, extra):
            body = None
            for alt in evidence.grounding_gids(g).tolist()[1:]:
                if not graph.reaches(h, {facts[b] for b in alt}, extra):
                    body = tuple(alt)
                    break
            if body is None:
                continue
        out[g] = body
        for b in body:
            extra.setdefault(facts[b], []).append(h)
    return out


class RuleSearch:
    """``findSingleRule`` with state that survives across calls.

    Groundings depend only on the KB, so they are cached by fingerprint; the
    residual inputs (covered facts, counterexamples so far, the dependency
    graph) are passed to every :meth:`find` call.
    """

    def __init__(self, kb: KnowledgeBase, cfg: SearchConfig | None = None):
        self.kb = kb
        self.cfg = cfg or SearchConfig()
        self._evidence: dict[str, Evidence] = {}
        self._signature = list(kb.relations.values())
        self._constants = kb.position_constants()
        self._children: dict[str, list[tuple[Rule, str]]] = {}
        self.evaluated = 0

    def evidence(self, rule: Rule, fp: str | None = None) -> Evidence:
        fp = fingerprint(rule) if fp is None else fp
        ev = self._evidence.get(fp)
        if ev is None:
            ev = ground(rule, self.kb)
            self._evidence[fp] = ev
            self.evaluated += 1
        return ev

    def children(self, rule: Rule, fp: str) -> list[tuple[Rule, str]]:
        out = self._children.get(fp)
        if out is None:
            out = extend_with_fingerprints(rule, self._signature, self._constants)
            self._children[fp] = out
        return out

    def _score(self, rule, fp, covered, cex) -> _Scored:
        ev = self.evidence(rule, fp)
        raw_new = int((~covered[ev.pos_gid]).sum())
        neg = ev.n_negative
        table = cex.get(rule.preds[0]) if cex else None
        if neg and table is not None and len(table):
            neg -= int(ev.entails_rows(table).sum())
        n, c = length(rule), cost(rule)
        # Extensions only shrink the entailed set and add length.
        return _Scored(rule, fp, n, raw_new, neg, c, raw_new - neg - c, raw_new - (n + 1))

    def _finish(self, s: _Scored, covered, graph) -> None:
        if s.raw_new:
            s.proofs = acyclic_proofs(self.evidence(s.rule, s.fp), covered, graph)
        s.score = Score(len(s.proofs) - s.negative - s.cost, len(s.proofs), s.negative, s.cost)

    @staticmethod
    def _rank(s: _Scored) -> tuple:
        # Beam order: optimistic bound first so that general rules with high
        # coverage survive long enough to be specialised, then the score.
        return (-s.bound, -s.upper, s.length, s.fp)

    def find(
        self,
        covered: np.ndarray | Iterable[Fact] = (),
        seen: Iterable[str] = (),
        graph: DependencyGraph | None = None,
        counterexamples: dict[str, np.ndarray] | None = None,
    ) -> Candidate | None:
        kb, cfg = self.kb, self.cfg
        if not isinstance(covered, np.ndarray):
            mask = np.zeros(len(kb), dtype=bool)
            for f in covered:
                mask[kb.fact_id[f]] = True
            covered = mask
        seen = set(seen)
        best: _Scored | None = None
        visited: set[str] = set()

        def consider(s: _Scored):
            nonlocal best
            if s.fp in seen or is_ground_axiom(s.rule):
                return
            floor = cfg.min_delta if best is None else max(cfg.min_delta, best.score.delta)
            if s.upper < floor:
                return
            self._finish(s, covered, graph)
            d = s.score.delta
            if d < cfg.min_delta:
                return
            if best is None or (-d, s.length, s.fp) < (-best.score.delta, best.length, best.fp):
                best = s

        heads = [r for r in kb.relations.values() if cfg.target_relations is None or r.name in cfg.target_relations]
        for rel in heads:
            root = new_head_rule(rel)
            fp = fingerprint(root)
            visited.add(fp)
            s = self._score(root, fp, covered, counterexamples)
            consider(s)
            frontier = [s]
            for _ in range(cfg.max_rule_length):
                scored = []
                for parent in frontier:
                    for child, cfp in self.children(parent.rule, parent.fp):
                        if cfp in visited:
                            continue
                        visited.add(cfp)
                        cs = self._score(child, cfp, covered, counterexamples)
                        consider(cs)
                        scored.append(cs)
                floor = cfg.min_delta if best is None else max(cfg.min_delta, best.score.delta)
                keep = [x for x in scored if x.bound >= floor and x.length < cfg.max_rule_length]
                keep.sort(key=self._rank)
                frontier = keep if cfg.beam_width is None else keep[: cfg.beam_width]
                if not frontier:
                    break
        if best is None:
            return None
        return Candidate(best.rule, self.evidence(best.rule, best.fp), best.score, best.fp, best.proofs)


def find_single_rule(
    kb: KnowledgeBase,
    covered: Iterable[Fact] | np.ndarray = (),
    cfg: SearchConfig | None = None,
    seen: Iterable[str] = (),
) -> tuple[Rule, Evidence, Score] | None:
    """Best rule by net size reduction over the facts not yet covered.

    Beam search from every head relation's most general rule; returns
    ``(rule, evidence, score)`` with ``score.delta >= cfg.min_delta`` or
    ``None``. Ties go to the shorter rule, then the smaller fingerprint.
    """
    found = RuleSearch(kb, cfg).find(covered, seen)
    if found is None:
        return None
    return found.rule, found.evidence, found.score
