"""Compare the numba join kernel with the numpy fallback.

    python3 benchmarks/bench_join.py [--facts 20000] [--constants 2000] [--small-facts 60] [--repeat 5]

Two workloads, each checked to give identical results on both paths before
timing: a few large joins on a random KB, and grounding every rule of
length <= 2 over a small KB, which is what rule search spends its time on.
"""

import argparse
import random
import time

import numpy as np

from kbcompress import _kernels
from kbcompress.evaluate import _plan, ground
from kbcompress.kb import KnowledgeBase
from kbcompress.rules import enumerate_rules, parse_rule

RULES = [
    "p(X,Y) :- q(X,Y).",
    "p(X,Y) :- q(X,Z), r(Z,Y).",
    "p(X,Y) :- q(X,Z), r(Z,Y), s(X).",
    "s(X) :- q(X,Y), q(Y,Z), r(Z,X).",
]


def make_kb(n_facts: int, n_constants: int, seed: int) -> KnowledgeBase:
    rng = random.Random(seed)
    consts = [f"c{i}" for i in range(n_constants)]
    atoms = []
    for _ in range(n_facts):
        rel = rng.choice("pqrs")
        k = 1 if rel == "s" else 2
        atoms.append((rel, [rng.choice(consts) for _ in range(k)]))
    return KnowledgeBase.from_atoms(atoms, consts)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--facts", type=int, default=20000)
    ap.add_argument("--constants", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--small-facts", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    kb = make_kb(args.facts, args.constants, args.seed)
    print(f"KB: {len(kb)} facts, {kb.domain_size} constants, numba available: {_kernels.HAVE_NUMBA}")
    _kernels.warm_up()
    print(f"{'rule':40s} {'groundings':>10s} {'numba s':>9s} {'numpy s':>9s} {'speedup':>8s}")
    for text in RULES:
        rule = parse_rule(text, kb)
        slots, codes = _plan(rule, kb.slot)
        a = _kernels.join_numba(kb.store, slots, codes, rule.n_vars)
        b = _kernels.join_numpy(kb.store, slots, codes, rule.n_vars)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        tn = best_of(lambda: _kernels.join_numba(kb.store, slots, codes, rule.n_vars), args.repeat)
        tp = best_of(lambda: _kernels.join_numpy(kb.store, slots, codes, rule.n_vars), args.repeat)
        print(f"{text:40s} {len(a[0]):10d} {tn:9.4f} {tp:9.4f} {tp / tn:8.1f}x")

    small = make_kb(args.small_facts, args.small_facts // 2, args.seed)
    rules = list(enumerate_rules(small.relations.values(), 2, small.position_constants()))

    def ground_all():
        return [ground(r, small).n_positive for r in rules]

    def timed(flag):
        old = _kernels.USE_NUMBA
        _kernels.USE_NUMBA = flag
        try:
            return ground_all(), best_of(ground_all, args.repeat)
        finally:
            _kernels.USE_NUMBA = old

    (pa, tn), (pb, tp) = timed(True), timed(False)
    assert pa == pb
    label = f"{len(rules)} rules over {len(small)} facts"
    print(f"{label:40s} {'':10s} {tn:9.4f} {tp:9.4f} {tp / tn:8.1f}x")


if __name__ == "__main__":
    main()
