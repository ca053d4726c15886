"""kbcompress command line.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .bundle import BundleError, read_bundle, write_bundle
from .evaluate import ground, score
from .extract import extract, verify
from .kb import KBParseError, read_kb, serialize_kb, stats
from .rules import enumerate_rules, format_rule, is_ground_axiom
from .search import SearchConfig
from .vc import cover_from_rules, graph_to_kb, parse_graph

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_INPUT = 2


def _default_out(path: str) -> str:
    stem, _ = os.path.splitext(path)
    return stem + ".bundle"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _is_reduction(kb) -> bool:
    rels = kb.relations
    if "edge" not in rels or any(r.arity != 1 for r in rels.values()):
        return False
    return all(n == "edge" or (n[:1] == "v" and n[1:].isdigit()) for n in rels)


def cmd_compress(args) -> int:
    kb = read_kb(args.kb, args.format)
    targets = None
    if args.target:
        targets = frozenset(t.strip() for t in args.target.split(",") if t.strip())
        unknown = sorted(targets - set(kb.relations))
        if unknown:
            print(f"error: unknown target relation(s): {', '.join(unknown)}", file=sys.stderr)
            return EXIT_INPUT
    cfg = SearchConfig(
        beam_width=args.beam if args.beam > 0 else None,
        max_rule_length=args.max_len,
        min_delta=args.min_delta,
        target_relations=targets,
    )
    result = extract(kb, cfg)
    report = verify(kb, result)
    extra = {}
    if _is_reduction(kb):
        extra["vertex_cover"] = sorted(cover_from_rules(result.H))
    out = args.out or _default_out(args.kb)
    config = {
        "beam": cfg.beam_width,
        "max_len": cfg.max_rule_length,
        "min_delta": cfg.min_delta,
        "targets": sorted(targets) if targets else None,
    }
    write_bundle(out, kb, result, config, report.ok, extra, args.dump_graph)
    print(result.summary())
    for r, s in zip(result.H, result.scores):
        print(f"  {format_rule(r, kb.constants)}  delta={s.delta}")
    if not report.ok:
        print(f"verification FAILED: {len(report.missing)} missing, {len(report.extra)} extra", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_decompress(args) -> int:
    bundle = read_bundle(args.bundle)
    _emit(serialize_kb(bundle.decompress()), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    kb = read_kb(args.kb, args.format)
    bundle = read_bundle(args.bundle)
    got = {(f.relation, bundle.kb.names(f)) for f in bundle.closure()}
    want = {(f.relation, kb.names(f)) for f in kb.facts}
    want |= {(f.relation, bundle.kb.names(f)) for f in bundle.counter}
    missing, extra = want - got, got - want
    if missing or extra:
        print(f"FAIL: {len(missing)} missing, {len(extra)} extra")
        for rel, names in sorted(missing)[:10]:
            print(f"  missing {rel}({','.join(names)})")
        for rel, names in sorted(extra)[:10]:
            print(f"  extra   {rel}({','.join(names)})")
        return EXIT_VERIFY
    print(f"OK: {len(kb)} facts recovered")
    return EXIT_OK


def cmd_gen_vc(args) -> int:
    with open(args.graph, encoding="utf-8") as fh:
        g = parse_graph(fh.read())
    _emit(serialize_kb(graph_to_kb(g)), args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    kb = read_kb(args.kb, args.format)
    st = stats(kb)
    print(f"relations: {st.relations}")
    print(f"facts: {st.total_facts}")
    print(f"constants: {st.constants}")
    for rel in kb.relations.values():
        print(f"  {rel.name}/{rel.arity}\t{st.facts[rel.name]}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    kb = read_kb(args.kb, args.format)
    rows = []
    for r in enumerate_rules(kb.relations.values(), args.max_len, kb.position_constants()):
        if is_ground_axiom(r):
            continue
        s = score(ground(r, kb))
        rows.append((-s.delta, format_rule(r, kb.constants), s))
    rows.sort(key=lambda t: (t[0], t[1]))
    for _, text, s in rows:
        print(f"{s.delta}\t{s.new_positive}\t{s.negative}\t{s.cost}\t{text}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbcompress", description="Compress a fact base into rules plus the facts they cannot derive.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    def kb_arg(p):
        p.add_argument("kb", help="fact file (.tsv, or .pl/.dl/.atoms/.lp for atom syntax)")
        p.add_argument("--format", choices=["tsv", "atoms"], default=None, help="override format detection")

    p = sub.add_parser("compress", help="extract rules and write a bundle")
    kb_arg(p)
    p.add_argument("--beam", type=int, default=5, help="beam width, 0 for unbounded (default 5)")
    p.add_argument("--max-len", type=int, default=4, help="maximum rule length (default 4)")
    p.add_argument("--min-delta", type=int, default=0, help="smallest size reduction a rule must bring (default 0)")
    p.add_argument("--target", default=None, help="comma-separated head relations (default: all)")
    p.add_argument("--out", default=None, help="bundle directory (default: <kb>.bundle)")
    p.add_argument("--dump-graph", action="store_true", help="also write the dependency graph as graph.tsv")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="rebuild the fact file from a bundle")
    p.add_argument("bundle")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("verify", help="check that a bundle rebuilds a fact file exactly")
    kb_arg(p)
    p.add_argument("bundle")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen-vc", help="build the vertex-cover reduction KB for a graph")
    p.add_argument("graph", help="'n m' header, then m lines 'i j' (1-based)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.set_defaults(func=cmd_gen_vc)

    p = sub.add_parser("stats", help="relation, fact and constant counts")
    kb_arg(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("enumerate", help="score every valid rule up to a length")
    kb_arg(p)
    p.add_argument("--max-len", type=int, required=True)
    p.set_defaults(func=cmd_enumerate)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, KBParseError, BundleError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
