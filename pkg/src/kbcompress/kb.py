"""Relational knowledge bases under the closed-world assumption.

Constants are interned into dense integer ids; facts keep the ids, and the
numeric kernels work on per-relation ``int64`` tables built from them.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from ._kernels import FactStore


class KBParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownRelationError(KeyError):
    pass


class Relation(NamedTuple):
    name: str
    arity: int


class Fact(NamedTuple):
    """A ground atom; ``args`` are constant ids of the owning KB."""

    relation: str
    args: tuple[int, ...]


_BARE_CONST = re.compile(r"[a-z][A-Za-z0-9_']*\Z")
_REL_NAME = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_ATOM_LINE = re.compile(r"\s*([a-z][A-Za-z0-9_]*)\s*\((.*)\)\s*\.\s*\Z")
_DIRECTIVE_LINE = re.compile(r"\s*:-\s*(const|relation)\s*\((.*)\)\s*\.\s*\Z")
_ARG_TOKEN = re.compile(r"\s*(?:'([^']*)'|([a-z][A-Za-z0-9_']*)|([0-9]+))\s*(,|\Z)")

# Directive lines; ordinary readers see them as comments.
CONST_DIRECTIVE = "#!const"
RELATION_DIRECTIVE = "#!relation"


def split_args(text: str, lineno: int | None = None, allow_int: bool = False) -> list[str]:
    """Split the inside of ``rel(a, 'b c', d)`` into constant names."""
    out: list[str] = []
    if not text.strip():
        return out
    pos = 0
    while pos < len(text):
        m = _ARG_TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise KBParseError(f"malformed argument list {text!r}", lineno)
        quoted, bare, num = m.group(1), m.group(2), m.group(3)
        if num is not None and not allow_int:
            raise KBParseError(f"numeric literal {num!r} is not a constant", lineno)
        out.append(quoted if quoted is not None else (bare if bare is not None else num))
        pos = m.end()
        if m.group(4) == "" and pos < len(text):
            raise KBParseError(f"malformed argument list {text!r}", lineno)
        if m.group(4) == "," and pos >= len(text):
            raise KBParseError(f"dangling comma in {text!r}", lineno)
    return out


def format_constant(name: str) -> str:
    if _BARE_CONST.match(name):
        return name
    if "'" in name:
        raise ValueError(f"constant {name!r} cannot be written in atoms syntax")
    return f"'{name}'"


@dataclass(eq=False)
class KnowledgeBase:
    """Immutable set of facts with an intern table for constants.

    Build with :meth:`from_atoms` or :func:`parse_kb`. The constant domain is
    the intern table; it may hold constants that occur in no fact.
    """

    constants: tuple[str, ...]
    relations: dict[str, Relation]
    _by_rel: dict[str, tuple[Fact, ...]]
    _cid: dict[str, int] = field(repr=False)

    def __post_init__(self):
        self.facts: tuple[Fact, ...] = tuple(f for rel in self.relations for f in self._by_rel[rel])
        self.fact_id: dict[Fact, int] = {f: i for i, f in enumerate(self.facts)}
        self._offset: dict[str, int] = {}
        off = 0
        for rel in self.relations:
            self._offset[rel] = off
            off += len(self._by_rel[rel])
        self.slot: dict[str, int] = {rel: i for i, rel in enumerate(self.relations)}
        self.tables: list[np.ndarray] = [
            np.array([f.args for f in self._by_rel[r.name]], dtype=np.int64).reshape(-1, r.arity)
            for r in self.relations.values()
        ]
        self.store = FactStore(self.tables, len(self.constants))
        self._keys: dict[str, np.ndarray] = {}
        self._position_constants: dict[tuple[str, int], tuple[int, ...]] | None = None

    # construction ----------------------------------------------------------

    @classmethod
    def from_atoms(
        cls,
        atoms: Iterable[tuple[str, Iterable[str]]],
        constants: Iterable[str] = (),
        relations: Iterable[tuple[str, int]] = (),
    ) -> "KnowledgeBase":
        """Build from ``(relation, [constant names])`` pairs.

        ``constants`` are interned first, in order, so they can extend the
        domain beyond the constants that occur in facts. ``relations``
        declares relations that may have no facts.
        """
        builder = _Builder()
        for name in constants:
            builder.intern(name)
        for name, arity in relations:
            builder.declare(name, arity)
        for rel, args in atoms:
            builder.add(rel, list(args))
        return builder.build()

    # lookups -----------------------------------------------------------------

    @property
    def domain_size(self) -> int:
        return len(self.constants)

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self):
        return iter(self.facts)

    def __contains__(self, fact) -> bool:
        return fact in self.fact_id

    def relation(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise UnknownRelationError(name) from None

    def facts_of(self, relation: str) -> tuple[Fact, ...]:
        self.relation(relation)
        return self._by_rel[relation]

    def offset(self, relation: str) -> int:
        return self._offset[relation]

    def cid(self, name: str) -> int:
        try:
            return self._cid[name]
        except KeyError:
            raise KeyError(f"unknown constant {name!r}") from None

    def has_constant(self, name: str) -> bool:
        return name in self._cid

    def atom(self, relation: str, *names: str) -> Fact:
        """Build a :class:`Fact` from constant names (no membership check)."""
        rel = self.relation(relation)
        if len(names) != rel.arity:
            raise ValueError(f"{relation}/{rel.arity} given {len(names)} arguments")
        return Fact(relation, tuple(self.cid(n) for n in names))

    def names(self, fact: Fact) -> tuple[str, ...]:
        return tuple(self.constants[c] for c in fact.args)

    def format_fact(self, fact: Fact) -> str:
        return f"{fact.relation}({','.join(format_constant(self.constants[c]) for c in fact.args)})"

    def keys(self, relation: str) -> np.ndarray:
        """Radix-encoded fact keys of ``relation`` in load order."""
        k = self._keys.get(relation)
        if k is None:
            k = self.store.encode(self.tables[self.slot[relation]])
            self._keys[relation] = k
        return k

    def position_constants(self) -> dict[tuple[str, int], tuple[int, ...]]:
        """Constants occurring at each ``(relation, arg index)``, sorted by id."""
        if self._position_constants is None:
            out = {}
            for rel in self.relations.values():
                table = self.tables[self.slot[rel.name]]
                for i in range(rel.arity):
                    out[rel.name, i] = tuple(int(c) for c in np.unique(table[:, i]))
            self._position_constants = out
        return self._position_constants


class _Builder:
    def __init__(self):
        self.constants: list[str] = []
        self.cid: dict[str, int] = {}
        self.relations: dict[str, Relation] = {}
        self.by_rel: dict[str, dict[Fact, None]] = {}

    def intern(self, name: str) -> int:
        c = self.cid.get(name)
        if c is None:
            c = self.cid[name] = len(self.constants)
            self.constants.append(name)
        return c

    def declare(self, name: str, arity: int, lineno: int | None = None) -> Relation:
        if not name:
            raise KBParseError("empty relation name", lineno)
        if arity < 1:
            raise KBParseError(f"relation {name!r} needs arity >= 1", lineno)
        rel = self.relations.get(name)
        if rel is None:
            rel = self.relations[name] = Relation(name, arity)
            self.by_rel[name] = {}
        elif rel.arity != arity:
            raise KBParseError(
                f"arity mismatch for {name!r}: expected {rel.arity}, got {arity}", lineno
            )
        return rel

    def add(self, name: str, args: list[str], lineno: int | None = None) -> None:
        self.declare(name, len(args), lineno)
        fact = Fact(name, tuple(self.intern(a) for a in args))
        self.by_rel[name][fact] = None

    def build(self) -> KnowledgeBase:
        return KnowledgeBase(
            constants=tuple(self.constants),
            relations=dict(self.relations),
            _by_rel={k: tuple(v) for k, v in self.by_rel.items()},
            _cid=dict(self.cid),
        )


# parsing / serialization -------------------------------------------------------


def parse_kb(stream: TextIO | str, format: str = "tsv") -> KnowledgeBase:
    """Read a KB in ``tsv`` or ``atoms`` format.

    Duplicate facts merge silently; a relation's arity is fixed by its first
    occurrence and later mismatches raise :class:`KBParseError`.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    if format not in ("tsv", "atoms"):
        raise ValueError(f"unknown KB format {format!r}")
    builder = _Builder()
    for lineno, raw in enumerate(stream, 1):
        line = raw.rstrip("\r\n")
        if format == "tsv":
            _parse_tsv_line(builder, line, lineno)
        else:
            _parse_atoms_line(builder, line, lineno)
    return builder.build()


def _parse_tsv_line(builder: _Builder, line: str, lineno: int) -> None:
    if not line.strip():
        return
    if line.startswith("#"):
        fields = line.split("\t")
        if fields[0] == CONST_DIRECTIVE:
            for name in fields[1:]:
                if not name:
                    raise KBParseError("empty constant in directive", lineno)
                builder.intern(name)
        elif fields[0] == RELATION_DIRECTIVE:
            if len(fields) != 3 or not fields[2].isdigit():
                raise KBParseError("expected '#!relation<TAB>name<TAB>arity'", lineno)
            builder.declare(fields[1], int(fields[2]), lineno)
        return
    fields = line.split("\t")
    if not fields[0]:
        raise KBParseError("empty relation name", lineno)
    if len(fields) < 2:
        raise KBParseError(f"fact {line!r} has no arguments", lineno)
    if any(not f for f in fields[1:]):
        raise KBParseError("empty argument", lineno)
    builder.add(fields[0], fields[1:], lineno)


def _parse_atoms_line(builder: _Builder, line: str, lineno: int) -> None:
    stripped = line.strip()
    if not stripped or stripped.startswith("%"):
        return
    d = _DIRECTIVE_LINE.match(line)
    if d:
        if d.group(1) == "const":
            for name in split_args(d.group(2), lineno):
                builder.intern(name)
        else:
            parts = [p.strip() for p in d.group(2).split(",")]
            if len(parts) != 2 or not _REL_NAME.match(parts[0]) or not parts[1].isdigit():
                raise KBParseError("expected ':- relation(name, arity).'", lineno)
            builder.declare(parts[0], int(parts[1]), lineno)
        return
    m = _ATOM_LINE.match(line)
    if m is None:
        if re.match(r"\s*\(", line):
            raise KBParseError("empty relation name", lineno)
        raise KBParseError(f"malformed atom {stripped!r}", lineno)
    args = split_args(m.group(2), lineno)
    if not args:
        raise KBParseError(f"atom {stripped!r} has no arguments", lineno)
    builder.add(m.group(1), args, lineno)


def read_kb(path, format: str | None = None) -> KnowledgeBase:
    if format is None:
        format = guess_format(str(path))
    with open(path, encoding="utf-8") as fh:
        return parse_kb(fh, format)


def guess_format(path: str) -> str:
    return "atoms" if path.endswith((".pl", ".dl", ".atoms", ".lp")) else "tsv"


def format_facts(kb: KnowledgeBase, facts: Iterable[Fact], format: str = "tsv") -> list[str]:
    """Fact lines sorted by relation, then constant names."""
    rows = sorted((f.relation, kb.names(f)) for f in facts)
    if format == "tsv":
        return ["\t".join((rel, *args)) for rel, args in rows]
    return [f"{rel}({','.join(format_constant(a) for a in args)})." for rel, args in rows]


def serialize_kb(kb: KnowledgeBase, format: str = "tsv", facts: Iterable[Fact] | None = None) -> str:
    """Canonical text for ``facts`` (default: all of ``kb``).

    Domain constants and relations that no written fact mentions are kept
    through directive lines so the domain survives a round trip.
    """
    facts = list(kb.facts if facts is None else facts)
    used_c = {c for f in facts for c in f.args}
    used_r = {f.relation for f in facts}
    lines = []
    spare = sorted(kb.constants[c] for c in range(kb.domain_size) if c not in used_c)
    empty = sorted(r for r in kb.relations.values() if r.name not in used_r)
    if format == "tsv":
        for rel in empty:
            lines.append(f"{RELATION_DIRECTIVE}\t{rel.name}\t{rel.arity}")
        if spare:
            lines.append("\t".join((CONST_DIRECTIVE, *spare)))
    else:
        for rel in empty:
            lines.append(f":- relation({rel.name}, {rel.arity}).")
        if spare:
            lines.append(f":- const({', '.join(format_constant(c) for c in spare)}).")
    lines.extend(format_facts(kb, facts, format))
    return "".join(line + "\n" for line in lines)


# queries ---------------------------------------------------------------------------


def contains(kb: KnowledgeBase, atom: Fact) -> bool:
    """CWA truth of ``atom``; unknown relations raise instead of answering False."""
    rel = kb.relation(atom.relation)
    if len(atom.args) != rel.arity:
        raise ValueError(f"{atom.relation}/{rel.arity} given {len(atom.args)} arguments")
    return atom in kb.fact_id


@dataclass(frozen=True)
class KBStats:
    relations: int
    facts: dict[str, int]
    constants: int

    @property
    def total_facts(self) -> int:
        return sum(self.facts.values())


def stats(kb: KnowledgeBase) -> KBStats:
    return KBStats(
        relations=len(kb.relations),
        facts={r: len(kb.facts_of(r)) for r in kb.relations},
        constants=kb.domain_size,
    )
