"""Lossless compression of relational fact bases with first-order Horn rules."""

from .evaluate import Evidence, Score, closure, ground, score
from .extract import ExtractionResult, extract, verify
from .graph import DependencyGraph, cover_cycles
from .kb import Fact, KnowledgeBase, Relation, parse_kb, read_kb, serialize_kb
from .rules import Rule, extensions, fingerprint, format_rule, length, parse_rule
from .search import SearchConfig, find_single_rule

__version__ = "0.1.0"

__all__ = [
    "DependencyGraph",
    "Evidence",
    "ExtractionResult",
    "Fact",
    "KnowledgeBase",
    "Relation",
    "Rule",
    "Score",
    "SearchConfig",
    "closure",
    "cover_cycles",
    "extensions",
    "extract",
    "find_single_rule",
    "fingerprint",
    "format_rule",
    "ground",
    "length",
    "parse_kb",
    "parse_rule",
    "read_kb",
    "score",
    "serialize_kb",
    "verify",
]
