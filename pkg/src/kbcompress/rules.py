"""First-order Horn rules as partitions of argument positions.

A rule is a head atom plus body atoms over relation names. Every argument
slot holds an integer term: a variable id (``>= 0``) or a constant encoded as
``-(cid + 1)``. Variables are renumbered by first occurrence, so two rules
built the same way compare equal. Positions sharing a variable form an
equivalence class; a constant position is a class of its own.
"""

from __future__ import annotations

import itertools
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

from .kb import KBParseError, KnowledgeBase, Relation, format_constant, split_args

Signature = Iterable[Relation]
ConstantCandidates = Mapping[tuple[str, int], Iterable[int]]


def const_term(cid: int) -> int:
    return -cid - 1


def term_const(term: int) -> int:
    return -term - 1


def is_const(term: int) -> bool:
    return term < 0


@dataclass(frozen=True)
class Rule:
    preds: tuple[str, ...]
    args: tuple[tuple[int, ...], ...]

    @property
    def head(self) -> tuple[str, tuple[int, ...]]:
        return self.preds[0], self.args[0]

    @property
    def body(self) -> list[tuple[str, tuple[int, ...]]]:
        return list(zip(self.preds[1:], self.args[1:]))

    @property
    def n_vars(self) -> int:
        return 1 + max((t for a in self.args for t in a if t >= 0), default=-1)

    def positions(self):
        for j, a in enumerate(self.args):
            for i, t in enumerate(a):
                yield j, i, t

    def occurrences(self) -> Counter:
        return Counter(t for a in self.args for t in a if t >= 0)


def make_rule(preds: Sequence[str], args: Sequence[Sequence[int]]) -> Rule:
    """Build a rule, renumbering variables by first occurrence."""
    mapping: dict[int, int] = {}
    out = []
    for a in args:
        row = []
        for t in a:
            if t >= 0:
                t = mapping.setdefault(t, len(mapping))
            row.append(t)
        out.append(tuple(row))
    return Rule(tuple(preds), tuple(out))


class ArgLocation(NamedTuple):
    predicate_instance: int
    arg_index: int


class EquivalenceClass(NamedTuple):
    members: tuple[ArgLocation, ...]
    binding: tuple[str, int]  # ("var", id) or ("const", cid)


def equivalence_classes(rule: Rule) -> list[EquivalenceClass]:
    by_var: dict[int, list[ArgLocation]] = {}
    out = []
    for j, i, t in rule.positions():
        if is_const(t):
            out.append(EquivalenceClass((ArgLocation(j, i),), ("const", term_const(t))))
        else:
            by_var.setdefault(t, []).append(ArgLocation(j, i))
    out.extend(EquivalenceClass(tuple(m), ("var", v)) for v, m in by_var.items())
    return out


def new_head_rule(relation: Relation) -> Rule:
    """The most general rule for ``relation``: empty body, distinct variables."""
    return Rule((relation.name,), (tuple(range(relation.arity)),))


def length(rule: Rule) -> int:
    """Sum over classes of (size - 1); a constant counts as a class member."""
    occ = rule.occurrences()
    n_const = sum(1 for _, _, t in rule.positions() if is_const(t))
    return sum(n - 1 for n in occ.values()) + n_const


def cost(rule: Rule) -> int:
    """Size charged for a rule in ``|H|``; empty-length rules still cost 1."""
    return max(length(rule), 1)


def limited_vars(rule: Rule) -> list[int]:
    return sorted(v for v, n in rule.occurrences().items() if n >= 2)


def unlimited_vars(rule: Rule) -> list[int]:
    return sorted(v for v, n in rule.occurrences().items() if n == 1)


def generative_vars(rule: Rule) -> list[int]:
    head = {t for t in rule.args[0] if t >= 0}
    body = {t for a in rule.args[1:] for t in a if t >= 0}
    return sorted(head & body)


def is_ground_axiom(rule: Rule) -> bool:
    """Empty body and only constants in the head: a fact spelled as a rule."""
    return len(rule.preds) == 1 and all(is_const(t) for t in rule.args[0])


# canonical form ----------------------------------------------------------------


def _canonical(rule: Rule) -> tuple[tuple[str, ...], tuple[tuple[int, ...], ...]]:
    body = sorted(range(1, len(rule.preds)), key=lambda j: rule.preds[j])
    groups = [list(g) for _, g in itertools.groupby(body, key=lambda j: rule.preds[j])]
    preds = (rule.preds[0],) + tuple(rule.preds[j] for j in body)
    best = None
    for perm in itertools.product(*(itertools.permutations(g) for g in groups)):
        order = [0, *itertools.chain.from_iterable(perm)]
        mapping: dict[int, int] = {}
        enc = tuple(
            tuple(t if t < 0 else mapping.setdefault(t, len(mapping)) for t in rule.args[j])
            for j in order
        )
        if best is None or enc < best:
            best = enc
    return preds, best


def canonical_rule(rule: Rule) -> Rule:
    preds, args = _canonical(rule)
    return Rule(preds, args)


def fingerprint(rule: Rule) -> str:
    """Canonical identity of ``rule`` up to variable renaming and body order.

    Body atoms are sorted by relation; among k same-relation instances the
    lexicographically least class labelling over all k! orders is kept.
    """
    preds, args = _canonical(rule)
    parts = []
    for p, a in zip(preds, args):
        parts.append(p + "(" + ",".join(f"#{term_const(t)}" if t < 0 else str(t) for t in a) + ")")
    return parts[0] + ":-" + ",".join(parts[1:])


# validity (the restricted rule space) -------------------------------------------------


def is_trivial(rule: Rule) -> bool:
    """Some body atom repeats the head exactly."""
    return any(
        p == rule.preds[0] and a == rule.args[0] for p, a in zip(rule.preds[1:], rule.args[1:])
    )


def linked_atoms(rule: Rule) -> set[int]:
    """Indices of atoms joined to the head through chains of shared variables."""
    atoms_of: dict[int, set[int]] = {}
    for j, _, t in rule.positions():
        if t >= 0:
            atoms_of.setdefault(t, set()).add(j)
    seen = {0}
    stack = [0]
    while stack:
        j = stack.pop()
        for t in rule.args[j]:
            if t >= 0:
                for k in atoms_of[t]:
                    if k not in seen:
                        seen.add(k)
                        stack.append(k)
    return seen


def has_independent_fragment(rule: Rule) -> bool:
    return len(linked_atoms(rule)) < len(rule.preds)


def is_valid(rule: Rule) -> bool:
    return not is_trivial(rule) and not has_independent_fragment(rule)


# extension operators -------------------------------------------------------------


def _signature(signature: Signature | Mapping[str, int]) -> list[Relation]:
    if isinstance(signature, Mapping):
        rels = [Relation(n, a) for n, a in signature.items()]
    else:
        rels = [Relation(r.name, r.arity) for r in signature]
    return sorted(rels)


def _raw_extensions(rule: Rule, sig: list[Relation], constants: ConstantCandidates | None):
    occ = rule.occurrences()
    empty = [(j, i) for j, i, t in rule.positions() if t >= 0 and occ[t] == 1]
    limited = sorted(v for v, n in occ.items() if n >= 2)
    fresh = rule.n_vars
    preds = list(rule.preds)
    args = [list(a) for a in rule.args]

    def with_terms(changes, extra=None):
        new_args = [row[:] for row in args]
        new_preds = preds[:]
        if extra is not None:
            new_preds.append(extra[0])
            new_args.append(list(extra[1]))
        for (j, i), t in changes:
            new_args[j][i] = t
        return make_rule(new_preds, new_args)

    # Case 1: existing limited variable into an empty argument.
    for x in limited:
        for p in empty:
            yield with_terms([(p, x)])
    # Case 2: new atom, one argument bound to an existing limited variable.
    for rel in sig:
        new_vars = list(range(fresh, fresh + rel.arity))
        for x in limited:
            for i in range(rel.arity):
                row = new_vars[:]
                row[i] = x
                yield with_terms([], (rel.name, row))
    # Case 3: fresh limited variable on a pair of empty arguments.
    for p, q in itertools.combinations(empty, 2):
        yield with_terms([(q, args[p[0]][p[1]])])
    # Case 4: new atom; fresh limited variable joins one of its arguments
    # with an empty argument already in the rule.
    for rel in sig:
        new_vars = list(range(fresh, fresh + rel.arity))
        for i in range(rel.arity):
            for j, k in empty:
                row = new_vars[:]
                row[i] = args[j][k]
                yield with_terms([], (rel.name, row))
    # Case 5: constant into an empty argument.
    if constants is not None:
        for j, i in empty:
            for c in constants.get((preds[j], i), ()):
                yield with_terms([((j, i), const_term(c))])


def extensions(
    rule: Rule,
    signature: Signature | Mapping[str, int],
    constants: ConstantCandidates | None = None,
) -> list[Rule]:
    """Every distinct valid rule one extension step away from ``rule``.

    Results are deduplicated by fingerprint, keep generation order, and are
    each exactly one longer than ``rule``.
    """
    return [r for r, _ in extend_with_fingerprints(rule, signature, constants)]


def extend_with_fingerprints(rule, signature, constants=None) -> list[tuple[Rule, str]]:
    sig = signature if isinstance(signature, list) else _signature(signature)
    out = []
    seen: set[str] = set()
    for r in _raw_extensions(rule, sig, constants):
        if not is_valid(r):
            continue
        fp = fingerprint(r)
        if fp not in seen:
            seen.add(fp)
            out.append((r, fp))
    return out


# brute-force enumeration ------------------------------------------------------------


def _partitions(n: int, budget: int):
    """Set partitions of ``range(n)`` with ``n - blocks <= budget``, as block labels."""
    labels = [0] * n

    def rec(i, blocks):
        if i - blocks > budget:
            return
        if i == n:
            yield tuple(labels), blocks
            return
        for b in range(blocks + 1):
            labels[i] = b
            yield from rec(i + 1, max(blocks, b + 1))

    yield from rec(0, 0)


def iter_rules(
    signature: Signature | Mapping[str, int],
    max_len: int,
    constants: ConstantCandidates | None = None,
    heads: Iterable[str] | None = None,
):
    """Every valid rule of length ``<= max_len``, isomorphic copies included.

    Independent of :func:`extensions`: it places constants and partitions
    argument positions directly for every head and body multiset.
    """
    sig = _signature(signature)
    head_names = None if heads is None else set(heads)
    for head in sig:
        if head_names is not None and head.name not in head_names:
            continue
        for m in range(max_len + 1):
            for body in itertools.combinations_with_replacement(sig, m):
                atoms = [head, *body]
                slots = [(j, i) for j, r in enumerate(atoms) for i in range(r.arity)]
                for n_const in range(0, min(max_len, len(slots)) + 1):
                    for cpos in itertools.combinations(range(len(slots)), n_const):
                        choices = []
                        for s in cpos:
                            j, i = slots[s]
                            cands = () if constants is None else tuple(constants.get((atoms[j].name, i), ()))
                            choices.append(cands)
                        var_slots = [s for s in range(len(slots)) if s not in cpos]
                        for cvals in itertools.product(*choices):
                            for labels, _ in _partitions(len(var_slots), max_len - n_const):
                                terms = [0] * len(slots)
                                for s, c in zip(cpos, cvals):
                                    terms[s] = const_term(c)
                                for s, lab in zip(var_slots, labels):
                                    terms[s] = lab
                                args, k = [], 0
                                for r in atoms:
                                    args.append(terms[k : k + r.arity])
                                    k += r.arity
                                rule = make_rule([r.name for r in atoms], args)
                                if length(rule) <= max_len and is_valid(rule):
                                    yield rule


def enumerate_rules(
    signature: Signature | Mapping[str, int],
    max_len: int,
    constants: ConstantCandidates | None = None,
    heads: Iterable[str] | None = None,
) -> list[Rule]:
    """All valid rules of length ``<= max_len``, one per fingerprint."""
    out: dict[str, Rule] = {}
    for rule in iter_rules(signature, max_len, constants, heads):
        out.setdefault(fingerprint(rule), rule)
    return list(out.values())


# text form ---------------------------------------------------------------------------


def format_rule(rule: Rule, constants: Sequence[str] | None = None) -> str:
    """``head :- atom, atom.``; variables print as ``X0, X1, ...``."""

    def term(t):
        if t >= 0:
            return f"X{t}"
        c = term_const(t)
        return format_constant(constants[c]) if constants is not None else f"#{c}"

    def atom(p, a):
        return f"{p}({','.join(term(t) for t in a)})"

    head = atom(rule.preds[0], rule.args[0])
    body = ", ".join(atom(p, a) for p, a in zip(rule.preds[1:], rule.args[1:]))
    return f"{head} :- {body}." if body else f"{head} :- ."


_RULE = re.compile(r"\s*(.*?)\s*:-\s*(.*?)\s*\.\s*\Z", re.S)
_ATOM = re.compile(r"\s*([a-z][A-Za-z0-9_]*)\s*\(((?:'[^']*'|[^()'])*)\)\s*(,|\Z)")
_VAR_TOKEN = re.compile(r"\s*([A-Z][A-Za-z0-9]*)\s*(,|\Z)")


def _split_terms(text: str) -> list[tuple[str, str]]:
    """Terms of an argument list as ``("var", name)`` / ``("const", name)``."""
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _VAR_TOKEN.match(text, pos)
        if m:
            out.append(("var", m.group(1)))
            pos = m.end()
            continue
        m = re.compile(r"\s*('[^']*'|[a-z][A-Za-z0-9_']*)\s*(,|\Z)").match(text, pos)
        if not m:
            raise KBParseError(f"malformed term list {text!r}")
        out.append(("const", split_args(m.group(1))[0]))
        pos = m.end()
    return out


def parse_rule(text: str, kb: KnowledgeBase) -> Rule:
    """Parse one rule in the text form written by :func:`format_rule`."""
    m = _RULE.match(text)
    if not m:
        raise KBParseError(f"malformed rule {text.strip()!r}")
    atoms = []
    for part, required in ((m.group(1), True), (m.group(2), False)):
        pos = 0
        found = []
        while pos < len(part):
            a = _ATOM.match(part, pos)
            if not a:
                raise KBParseError(f"malformed atom list {part!r}")
            found.append((a.group(1), _split_terms(a.group(2))))
            pos = a.end()
        if required and len(found) != 1:
            raise KBParseError(f"rule head must be a single atom: {text.strip()!r}")
        atoms.extend(found)
    var_ids: dict[str, int] = {}
    preds, args = [], []
    for name, terms in atoms:
        rel = kb.relation(name)
        if len(terms) != rel.arity:
            raise KBParseError(f"{name}/{rel.arity} given {len(terms)} arguments")
        row = []
        for kind, tok in terms:
            if kind == "var":
                row.append(var_ids.setdefault(tok, len(var_ids)))
            else:
                if not kb.has_constant(tok):
                    raise KBParseError(f"unknown constant {tok!r}")
                row.append(const_term(kb.cid(tok)))
        preds.append(name)
        args.append(row)
    return make_rule(preds, args)
