"""Fact dependency graph: which facts a recorded proof consumes.

Vertices are the facts of the KB plus :data:`TOP`, the source of proofs by
rules with an empty body. Each fact has at most one recorded proof; its
in-neighbours are that proof's body facts, all of which must be available
before the fact can be rebuilt.
"""

from __future__ import annotations

from typing import Callable, Hashable, Iterable, Mapping, Sequence


class _Top:
    __slots__ = ()

    def __repr__(self):
        return "TOP"

    def __reduce__(self):
        return "TOP"


TOP = _Top()
TOP_NAME = "__top__"


class DependencyGraph:
    def __init__(self, vertices: Iterable[Hashable] = ()):
        self._order: dict[Hashable, int] = {TOP: 0}
        self.preds: dict[Hashable, dict[Hashable, None]] = {TOP: {}}
        self.succ: dict[Hashable, dict[Hashable, None]] = {TOP: {}}
        self.proof_owner: dict[Hashable, object] = {}
        for v in vertices:
            self.add_vertex(v)

    def add_vertex(self, v: Hashable) -> None:
        if v not in self._order:
            self._order[v] = len(self._order)
            self.preds[v] = {}
            self.succ[v] = {}

    def add_edge(self, b: Hashable, h: Hashable) -> None:
        if h is TOP:
            raise ValueError("TOP cannot have incoming edges")
        self.add_vertex(b)
        self.add_vertex(h)
        self.preds[h][b] = None
        self.succ[b][h] = None

    @property
    def vertices(self) -> list[Hashable]:
        return list(self._order)

    def facts(self) -> list[Hashable]:
        return [v for v in self._order if v is not TOP]

    def edges(self) -> list[tuple[Hashable, Hashable]]:
        return [(b, h) for h, ps in self.preds.items() for b in ps]

    def order(self, v: Hashable) -> int:
        return self._order[v]

    def add_proof(self, rule_id, fact: Hashable, body: Sequence[Hashable]) -> bool:
        """Record ``body`` as the proof of ``fact`` unless it already has one."""
        if fact in self.proof_owner:
            return False
        self.add_vertex(fact)
        if body:
            for b in body:
                self.add_edge(b, fact)
        else:
            self.add_edge(TOP, fact)
        self.proof_owner[fact] = rule_id
        return True

    def add_proofs(self, rule_id, proofs) -> int:
        """Record first-found proofs from an :class:`Evidence` or a fact->body mapping.

        Facts that already own a proof are left alone; returns how many
        proofs were added.
        """
        if not isinstance(proofs, Mapping):
            proofs = proofs.positive
        return sum(self.add_proof(rule_id, h, body) for h, body in proofs.items())

    def reaches(self, src: Hashable, targets: set, extra_succ: Mapping | None = None) -> bool:
        """Is any of ``targets`` reachable from ``src`` (``src`` itself included)?"""
        if src in targets:
            return True
        seen = {src}
        stack = [src]
        while stack:
            v = stack.pop()
            nxt = list(self.succ.get(v, ()))
            if extra_succ is not None:
                nxt.extend(extra_succ.get(v, ()))
            for w in nxt:
                if w in targets:
                    return True
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    def zero_in_degree(self) -> set:
        return {v for v in self._order if v is not TOP and not self.preds[v]}

    def mark_provable(self, seed: Iterable[Hashable]) -> set:
        """Close ``seed | {TOP}`` under "all in-neighbours marked implies marked"."""
        marked = set(seed)
        marked.add(TOP)
        waiting = {v: sum(1 for b in self.preds[v] if b not in marked) for v in self._order if v not in marked}
        queue = [v for v, n in waiting.items() if n == 0 and self.preds[v]]
        while queue:
            v = queue.pop()
            if v in marked:
                continue
            marked.add(v)
            for w in self.succ[v]:
                if w in marked:
                    continue
                waiting[w] -= 1
                if waiting[w] == 0:
                    queue.append(w)
        return marked

    def dump(self, name: Callable[[Hashable], str]) -> str:
        """Edge list ``body<TAB>head<TAB>rule_id``; TOP is spelled ``__top__``."""
        lines = []
        for h, ps in self.preds.items():
            for b in ps:
                bname = TOP_NAME if b is TOP else name(b)
                lines.append(f"{bname}\t{name(h)}\t{self.proof_owner.get(h, '')}")
        return "".join(line + "\n" for line in sorted(lines))


def strongly_connected_components(graph: DependencyGraph, within: Iterable[Hashable] | None = None) -> list[list]:
    """Tarjan's algorithm, iterative, optionally restricted to a vertex subset."""
    verts = graph.vertices if within is None else sorted(within, key=graph.order)
    allowed = set(verts)
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list[list] = []
    counter = 0
    for root in verts:
        if root in index:
            continue
        work = [(root, iter(graph.succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in allowed:
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(graph.succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(sorted(comp, key=graph.order))
    return out


def _cyclic(graph: DependencyGraph, comp: list) -> bool:
    return len(comp) > 1 or comp[0] in graph.succ[comp[0]]


def cover_cycles(graph: DependencyGraph) -> set:
    """Facts whose removal leaves the graph acyclic.

    Greedy per strongly connected component: drop the vertex with the
    largest in-degree times out-degree inside the component (earliest vertex
    on ties), then recurse on what remains of the component.
    """
    facts = graph.facts()
    work = [c for c in strongly_connected_components(graph, facts) if _cyclic(graph, c)]
    chosen: set = set()
    while work:
        comp = work.pop()
        inside = set(comp)

        def weight(v):
            indeg = sum(1 for b in graph.preds[v] if b in inside)
            outdeg = sum(1 for h in graph.succ[v] if h in inside)
            return (indeg * outdeg, -graph.order(v))

        best = max(comp, key=weight)
        chosen.add(best)
        inside.discard(best)
        work.extend(c for c in strongly_connected_components(graph, inside) if _cyclic(graph, c))
    return chosen
