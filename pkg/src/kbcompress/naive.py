"""Slow pure-Python reference implementations used as test oracles.

Nothing here shares code with the array kernels: rules are grounded by
plain backtracking over a set of facts, and isomorphism is decided by
trying every variable bijection.
"""

from __future__ import annotations

import itertools
from typing import Iterable

from .kb import Fact
from .rules import Rule, is_const, term_const


def _match(args, fact_args, bind):
    out = dict(bind)
    for t, x in zip(args, fact_args):
        if is_const(t):
            if term_const(t) != x:
                return None
        elif t in out:
            if out[t] != x:
                return None
        else:
            out[t] = x
    return out


def body_bindings(rule: Rule, facts: Iterable[Fact]):
    """Yield every variable binding (a dict) satisfying the body."""
    by_rel: dict[str, list[tuple]] = {}
    for f in facts:
        by_rel.setdefault(f.relation, []).append(f.args)
    body = rule.body

    def rec(j, bind):
        if j == len(body):
            yield bind
            return
        p, a = body[j]
        for args in by_rel.get(p, ()):
            b = _match(a, args, bind)
            if b is not None:
                yield from rec(j + 1, b)

    yield from rec(0, {})


def entailed(rule: Rule, facts: Iterable[Fact], domain: Iterable[int]) -> set[Fact]:
    """Head atoms produced by one application of ``rule`` to ``facts``."""
    facts = list(facts)
    domain = list(domain)
    p, head = rule.head
    out = set()
    for bind in body_bindings(rule, facts):
        free = sorted({t for t in head if not is_const(t) and t not in bind})
        for values in itertools.product(domain, repeat=len(free)):
            b = dict(bind)
            b.update(zip(free, values))
            out.add(Fact(p, tuple(term_const(t) if is_const(t) else b[t] for t in head)))
    return out


def naive_closure(seed: Iterable[Fact], rules: Iterable[Rule], domain: Iterable[int]) -> frozenset[Fact]:
    known = set(seed)
    rules = list(rules)
    domain = list(domain)
    while True:
        new = set()
        for r in rules:
            new |= entailed(r, known, domain)
        new -= known
        if not new:
            return frozenset(known)
        known |= new


def naive_evidence(rule: Rule, facts: Iterable[Fact], domain: Iterable[int]) -> tuple[set[Fact], set[Fact]]:
    """``(positive, negative)``: entailed atoms inside and outside ``facts``."""
    facts = set(facts)
    ent = entailed(rule, facts, domain)
    return ent & facts, ent - facts


def isomorphic(r1: Rule, r2: Rule) -> bool:
    """Same rule up to variable renaming and body reordering, by exhaustive search."""
    if r1.preds[0] != r2.preds[0] or sorted(r1.preds[1:]) != sorted(r2.preds[1:]):
        return False
    if r1.n_vars != r2.n_vars:
        return False
    b1 = sorted(zip(r1.preds[1:], r1.args[1:]))
    for perm in itertools.permutations(range(r1.n_vars)):
        def ren(a):
            return tuple(t if is_const(t) else perm[t] for t in a)

        if ren(r1.args[0]) != r2.args[0]:
            continue
        if sorted((p, ren(a)) for p, a in b1) == sorted(zip(r2.preds[1:], r2.args[1:])):
            return True
    return False
