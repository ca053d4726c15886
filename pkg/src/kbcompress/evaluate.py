"""Grounding rules against a KB, compression scores, and forward chaining."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from ._kernels import FactStore, decode_keys, encode_rows
from .kb import Fact, KnowledgeBase
from .rules import Rule, cost, is_const, term_const


def _plan(rule: Rule, slot_of: Mapping[str, int]):
    body = rule.args[1:]
    width = max((len(a) for a in body), default=1)
    codes = np.zeros((len(body), width), dtype=np.int64)
    for j, a in enumerate(body):
        codes[j, : len(a)] = a
    slots = np.array([slot_of[p] for p in rule.preds[1:]], dtype=np.int64)
    return slots, codes


class _HeadShape:
    """Which head positions the body determines and which range freely."""

    def __init__(self, rule: Rule):
        head = rule.args[0]
        body_vars = {t for a in rule.args[1:] for t in a if t >= 0}
        self.det = [i for i, t in enumerate(head) if is_const(t) or t in body_vars]
        self.free_vars: list[int] = []
        self.free_pos: dict[int, list[int]] = {}
        for i, t in enumerate(head):
            if not is_const(t) and t not in body_vars:
                if t not in self.free_pos:
                    self.free_vars.append(t)
                    self.free_pos[t] = []
                self.free_pos[t].append(i)
        self.head = head

    def partial(self, bind: np.ndarray) -> np.ndarray:
        n = bind.shape[0]
        cols = []
        for i in self.det:
            t = self.head[i]
            cols.append(np.full(n, term_const(t), dtype=np.int64) if is_const(t) else bind[:, t])
        return np.column_stack(cols).astype(np.int64) if cols else np.zeros((n, 0), dtype=np.int64)

    def free_ok(self, table: np.ndarray) -> np.ndarray:
        ok = np.ones(table.shape[0], dtype=bool)
        for pos in self.free_pos.values():
            for p in pos[1:]:
                ok &= table[:, p] == table[:, pos[0]]
        return ok

    def expand(self, partial: np.ndarray, domain: np.ndarray) -> np.ndarray:
        """Full head rows: each partial row crossed with ``domain`` per free variable."""
        u = len(self.free_vars)
        n = partial.shape[0]
        grid = (
            np.stack(np.meshgrid(*([domain] * u), indexing="ij"), -1).reshape(-1, u)
            if u
            else np.zeros((1, 0), dtype=np.int64)
        )
        out = np.empty((n * len(grid), len(self.head)), dtype=np.int64)
        for k, i in enumerate(self.det):
            out[:, i] = np.repeat(partial[:, k], len(grid))
        for k, v in enumerate(self.free_vars):
            for i in self.free_pos[v]:
                out[:, i] = np.tile(grid[:, k], n)
        return out


@dataclass(eq=False)
class Evidence:
    """What a rule entails over a KB.

    ``positive`` maps each entailed fact of the KB to the first body
    grounding found (atoms joined left to right, facts in load order);
    ``negative`` holds entailed atoms absent from the KB. Both are built
    lazily from the arrays; search code reads the arrays directly.
    """

    rule: Rule
    kb: KnowledgeBase = field(repr=False)
    rows: np.ndarray = field(repr=False)  # all groundings, per-atom local fact indices
    row_slot: np.ndarray = field(repr=False)  # distinct head pattern of each grounding
    slot_first: np.ndarray = field(repr=False)  # first grounding of each pattern
    slot_keys: np.ndarray = field(repr=False)
    pos_gid: np.ndarray = field(repr=False)  # ascending global ids of positive facts
    pos_slot: np.ndarray = field(repr=False)
    n_heads: int = 0
    shape: _HeadShape = field(default=None, repr=False)

    @property
    def n_positive(self) -> int:
        return len(self.pos_gid)

    @property
    def n_negative(self) -> int:
        return self.n_heads - len(self.pos_gid)

    def _body_facts(self, row) -> tuple[Fact, ...]:
        kb = self.kb
        return tuple(kb.facts_of(p)[int(r)] for p, r in zip(self.rule.preds[1:], row))

    def first_grounding_gids(self, slots: np.ndarray | None = None) -> np.ndarray:
        """Global ids of the first grounding's body facts, one row per positive."""
        slots = self.pos_slot if slots is None else slots
        rows = self.rows[self.slot_first[slots]]
        offs = np.array([self.kb.offset(p) for p in self.rule.preds[1:]], dtype=np.int64)
        return rows + offs if len(offs) else rows

    @cached_property
    def positive(self) -> dict[Fact, tuple[Fact, ...]]:
        facts = self.kb.facts
        return {
            facts[int(g)]: self._body_facts(self.rows[self.slot_first[s]])
            for g, s in zip(self.pos_gid, self.pos_slot)
        }

    def groundings(self, fact: Fact) -> list[tuple[Fact, ...]]:
        """Every body grounding that proves ``fact``, in enumeration order."""
        gid = self.kb.fact_id.get(fact)
        if gid is None:
            return []
        k = np.searchsorted(self.pos_gid, gid)
        if k >= len(self.pos_gid) or self.pos_gid[k] != gid:
            return []
        slot = self.pos_slot[k]
        return [self._body_facts(r) for r in self.rows[self.row_slot == slot]]

    def grounding_gids(self, gid: int) -> np.ndarray:
        k = np.searchsorted(self.pos_gid, gid)
        rows = self.rows[self.row_slot == self.pos_slot[k]]
        offs = np.array([self.kb.offset(p) for p in self.rule.preds[1:]], dtype=np.int64)
        return rows + offs if len(offs) else rows

    def head_rows(self) -> np.ndarray:
        """Every entailed head atom as a row of constant ids."""
        kb = self.kb
        partial = decode_keys(self.slot_keys, kb.store.base, len(self.shape.det))
        return self.shape.expand(partial, np.arange(kb.domain_size, dtype=np.int64))

    @cached_property
    def negative(self) -> frozenset[Fact]:
        head = self.rule.preds[0]
        rows = self.head_rows()
        if len(rows) == 0:
            return frozenset()
        keep = ~np.isin(self.kb.store.encode(rows), self.kb.keys(head))
        return frozenset(Fact(head, tuple(r)) for r in rows[keep].tolist())

    def entails_rows(self, table: np.ndarray) -> np.ndarray:
        """Mask over head-relation rows saying which ones the rule entails."""
        if table.shape[0] == 0 or len(self.slot_keys) == 0:
            return np.zeros(table.shape[0], dtype=bool)
        keys = encode_rows(table[:, self.shape.det], self.kb.store.base)
        k = np.searchsorted(self.slot_keys, keys)
        k = np.minimum(k, len(self.slot_keys) - 1)
        return (self.slot_keys[k] == keys) & self.shape.free_ok(table)


def ground(rule: Rule, kb: KnowledgeBase) -> Evidence:
    """Enumerate the body over ``kb`` and classify entailed head atoms.

    Head variables that no body atom binds range over the whole constant
    domain of ``kb``.
    """
    for p in rule.preds:
        kb.relation(p)
    slots, codes = _plan(rule, kb.slot)
    rows, bind = _kernels.join(kb.store, slots, codes, rule.n_vars)
    shape = _HeadShape(rule)
    partial = shape.partial(bind)
    base = kb.store.base
    keys = encode_rows(partial, base) if len(partial) else np.zeros(0, dtype=np.int64)
    slot_keys, slot_first, row_slot = np.unique(keys, return_index=True, return_inverse=True)
    row_slot = row_slot.reshape(-1)

    head = rule.preds[0]
    table = kb.tables[kb.slot[head]]
    if len(slot_keys) and table.shape[0]:
        tkeys = encode_rows(table[:, shape.det], base)
        k = np.minimum(np.searchsorted(slot_keys, tkeys), len(slot_keys) - 1)
        hit = (slot_keys[k] == tkeys) & shape.free_ok(table)
        pos_local = np.flatnonzero(hit)
        pos_slot = k[pos_local]
    else:
        pos_local = np.zeros(0, dtype=np.int64)
        pos_slot = np.zeros(0, dtype=np.int64)
    n_heads = len(slot_keys) * kb.domain_size ** len(shape.free_vars)
    return Evidence(
        rule=rule,
        kb=kb,
        rows=rows,
        row_slot=row_slot,
        slot_first=slot_first,
        slot_keys=slot_keys,
        pos_gid=pos_local.astype(np.int64) + kb.offset(head),
        pos_slot=pos_slot.astype(np.int64),
        n_heads=n_heads,
        shape=shape,
    )


@dataclass(frozen=True)
class Score:
    delta: int
    new_positive: int
    negative: int
    cost: int


def score(evidence: Evidence, already_covered: Iterable[Fact] | np.ndarray = (), rule: Rule | None = None) -> Score:
    """Net size reduction of adding ``rule``: new positives - negatives - cost.

    ``already_covered`` is a set of facts or a boolean mask over global fact
    ids; covered facts earn nothing a second time.
    """
    rule = evidence.rule if rule is None else rule
    if isinstance(already_covered, np.ndarray):
        new = int((~already_covered[evidence.pos_gid]).sum())
    else:
        covered = set(already_covered)
        facts = evidence.kb.facts
        new = sum(1 for g in evidence.pos_gid.tolist() if facts[g] not in covered)
    neg = evidence.n_negative
    c = cost(rule)
    return Score(new - neg - c, new, neg, c)


# forward chaining -------------------------------------------------------------------


def fixpoint(seed: Iterable[Fact], rules: Iterable[Rule], domain: Iterable[int]) -> tuple[frozenset[Fact], int]:
    """Least fixpoint by semi-naive iteration; returns ``(facts, rounds)``."""
    rules = list(rules)
    domain = np.array(sorted(set(int(c) for c in domain)), dtype=np.int64)
    seed = list(seed)
    arity: dict[str, int] = {}
    base = int(domain.max()) + 1 if len(domain) else 1
    for f in seed:
        arity.setdefault(f.relation, len(f.args))
        if f.args:
            base = max(base, max(f.args) + 1)
    for r in rules:
        for p, a in zip(r.preds, r.args):
            arity.setdefault(p, len(a))
            for t in a:
                if is_const(t):
                    base = max(base, term_const(t) + 1)
    rels = sorted(arity)
    known: dict[str, dict[tuple, None]] = {p: {} for p in rels}
    delta: dict[str, dict[tuple, None]] = {p: {} for p in rels}
    for f in seed:
        known[f.relation][f.args] = None
        delta[f.relation][f.args] = None
    shapes = [_HeadShape(r) for r in rules]

    def heads(rule, shape, bind):
        return shape.expand(shape.partial(bind), domain).tolist()

    for rule, shape in zip(rules, shapes):
        if len(rule.preds) == 1:
            bind = np.full((1, rule.n_vars), -1, dtype=np.int64)
            for row in heads(rule, shape, bind):
                t = tuple(row)
                if t not in known[rule.preds[0]]:
                    known[rule.preds[0]][t] = None
                    delta[rule.preds[0]][t] = None

    def table(facts: Iterable[tuple], k: int) -> np.ndarray:
        return np.array(list(facts), dtype=np.int64).reshape(-1, k)

    rounds = 0
    chained = [(r, s) for r, s in zip(rules, shapes) if len(r.preds) > 1]
    while any(delta.values()):
        rounds += 1
        full_slot = {p: i for i, p in enumerate(rels)}
        delta_slot = {p: len(rels) + i for i, p in enumerate(rels)}
        store = FactStore(
            [table(known[p], arity[p]) for p in rels] + [table(delta[p], arity[p]) for p in rels],
            base,
        )
        fresh: dict[str, dict[tuple, None]] = {p: {} for p in rels}
        for rule, shape in chained:
            full_slots, codes = _plan(rule, full_slot)
            for i, p in enumerate(rule.preds[1:]):
                if not delta[p]:
                    continue
                slots = full_slots.copy()
                slots[i] = delta_slot[p]
                _, bind = _kernels.join(store, slots, codes, rule.n_vars)
                if len(bind) == 0:
                    continue
                target = known[rule.preds[0]]
                out = fresh[rule.preds[0]]
                for row in heads(rule, shape, bind):
                    t = tuple(row)
                    if t not in target:
                        out[t] = None
        for p in rels:
            known[p].update(fresh[p])
        delta = fresh
    facts = frozenset(Fact(p, t) for p in rels for t in known[p])
    return facts, rounds


def closure(seed: Iterable[Fact], rules: Iterable[Rule], domain: Iterable[int]) -> frozenset[Fact]:
    """Everything derivable from ``seed`` with ``rules``; free head variables range over ``domain``."""
    return fixpoint(seed, rules, domain)[0]
