"""On-disk form of an extraction: a directory of four text files.

    rules.dl        one rule per line
    necessary.tsv   N, sorted
    counter.tsv     C, sorted
    manifest.json   format tag, domain, relations, accounting, config
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from .evaluate import closure
from .extract import ExtractionResult
from .kb import Fact, KBParseError, KnowledgeBase, format_facts, parse_kb
from .rules import Rule, format_rule, parse_rule

FORMAT_TAG = "kbcompress-bundle/1"
RULES_FILE = "rules.dl"
NECESSARY_FILE = "necessary.tsv"
COUNTER_FILE = "counter.tsv"
MANIFEST_FILE = "manifest.json"
GRAPH_FILE = "graph.tsv"


class BundleError(ValueError):
    pass


@dataclass
class Bundle:
    """A loaded bundle; ``kb`` holds only the necessary facts, over the full domain."""

    kb: KnowledgeBase
    rules: list[Rule]
    necessary: frozenset[Fact]
    counter: frozenset[Fact]
    manifest: dict = field(default_factory=dict)

    def closure(self) -> frozenset[Fact]:
        return closure(self.necessary, self.rules, range(self.kb.domain_size))

    def decompress(self) -> KnowledgeBase:
        facts = sorted(self.closure() - self.counter)
        return KnowledgeBase.from_atoms(
            ((f.relation, self.kb.names(f)) for f in facts),
            self.kb.constants,
            ((r.name, r.arity) for r in self.kb.relations.values()),
        )


def _write(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(line + "\n" for line in lines)


def write_bundle(
    out_dir: str,
    kb: KnowledgeBase,
    result: ExtractionResult,
    config: dict | None = None,
    verified: bool | None = None,
    extra: dict | None = None,
    dump_graph: bool = False,
) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, RULES_FILE), [format_rule(r, kb.constants) for r in result.H])
    _write(os.path.join(out_dir, NECESSARY_FILE), format_facts(kb, result.N))
    _write(os.path.join(out_dir, COUNTER_FILE), format_facts(kb, result.C))
    manifest = {
        "format": FORMAT_TAG,
        "relations": [[r.name, r.arity] for r in kb.relations.values()],
        "constants": list(kb.constants),
        "accounting": result.accounting,
        "config": config or {},
        "verified": verified,
        "rules": [
            {"rule": format_rule(r, kb.constants), **asdict(s)} for r, s in zip(result.H, result.scores)
        ],
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out_dir, MANIFEST_FILE), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    if dump_graph and result.graph is not None:
        with open(os.path.join(out_dir, GRAPH_FILE), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(result.graph.dump(kb.format_fact))


def _read_facts(path: str, kb: KnowledgeBase) -> frozenset[Fact]:
    with open(path, encoding="utf-8") as fh:
        part = parse_kb(fh, "tsv")
    out = set()
    for f in part.facts:
        rel = kb.relations.get(f.relation)
        if rel is None or rel.arity != len(f.args):
            raise BundleError(f"{os.path.basename(path)}: fact {part.format_fact(f)} does not match the manifest")
        names = part.names(f)
        if not all(kb.has_constant(n) for n in names):
            raise BundleError(f"{os.path.basename(path)}: fact {part.format_fact(f)} uses an unknown constant")
        out.add(Fact(f.relation, tuple(kb.cid(n) for n in names)))
    return frozenset(out)


def read_bundle(path: str) -> Bundle:
    if not os.path.isdir(path):
        raise BundleError(f"{path}: not a bundle directory")
    try:
        with open(os.path.join(path, MANIFEST_FILE), encoding="utf-8") as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise BundleError(f"{path}: unreadable manifest ({e})") from None
    if not isinstance(manifest, dict) or manifest.get("format") != FORMAT_TAG:
        raise BundleError(f"{path}: unsupported bundle format {manifest.get('format') if isinstance(manifest, dict) else None!r}")
    try:
        relations = [(str(n), int(a)) for n, a in manifest["relations"]]
        constants = [str(c) for c in manifest["constants"]]
    except (KeyError, TypeError, ValueError):
        raise BundleError(f"{path}: manifest lacks relations or constants") from None
    domain = KnowledgeBase.from_atoms((), constants, relations)
    try:
        necessary = _read_facts(os.path.join(path, NECESSARY_FILE), domain)
        counter = _read_facts(os.path.join(path, COUNTER_FILE), domain)
        with open(os.path.join(path, RULES_FILE), encoding="utf-8") as fh:
            rules = [parse_rule(line, domain) for line in fh if line.strip() and not line.startswith("%")]
    except (OSError, KBParseError, KeyError) as e:
        raise BundleError(f"{path}: {e}") from None
    kb = KnowledgeBase.from_atoms(
        ((f.relation, domain.names(f)) for f in sorted(necessary)), constants, relations
    )
    return Bundle(kb, rules, necessary, counter, manifest)
