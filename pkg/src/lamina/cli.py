"""Command line front end.

Quick-look subcommands (word, aut, leaf, subgroup, ball, distortion)
print directly; pipeline subcommands (filling, qc, factor) run a config
and print the text report; ``report`` runs a config and writes artifact
files.  Exit codes: 0 for a completed run, 1 for usage or input errors,
2 when a hypothesis precheck fails, 3 when caps left the outcome open.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, lab
from . import extension
from . import stallings
from . import traintrack
from .errors import (
    EXIT_ERROR,
    EXIT_HYPOTHESIS_VIOLATION,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    HypothesisViolationError,
    LaminaError,
    ResourceCapError,
)
from .words import format_automorphism, parse_automorphism, parse_word, parse_words


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; that code is reserved
    here for hypothesis violations, so usage errors raise instead."""

    def error(self, message):
        raise _UsageError(message)


def _load_automorphism(path: str):
    return parse_automorphism(Path(path).read_text())


def _load_map(args) -> "traintrack.MarkedGraphMap":
    if getattr(args, "map", None):
        return traintrack.parse_graph_map(Path(args.map).read_text())
    return traintrack.from_automorphism(_load_automorphism(args.aut))


def _cmd_word(args) -> int:
    w = parse_word(args.word, args.rank)
    if args.invert:
        w = ~w
    if args.length:
        print(len(w))
    else:
        print(w)
    return EXIT_OK


def _cmd_aut(args) -> int:
    phi = _load_automorphism(args.file)
    phi.ensure_certified()
    if args.word is not None:
        n = -args.n if args.invert else args.n
        print(phi.iterate(parse_word(args.word, phi.rank), n))
        return EXIT_OK
    print(format_automorphism(phi), end="")
    print(f"rank {phi.rank}, inverse certified")
    return EXIT_OK


def _cmd_leaf(args) -> int:
    f = _load_map(args)
    direction = traintrack.parse_direction(f, args.edge)
    segment = traintrack.leaf_segment(f, direction, args.n)
    print(" ".join(f.direction_name(e) for e in segment))
    print(f"length {len(segment)}")
    return EXIT_OK


def _cmd_subgroup(args) -> int:
    gens = parse_words(args.gens, args.rank)
    core = stallings.fold(gens, args.rank)
    if args.member is not None:
        inside = stallings.membership(core, parse_word(args.member, args.rank))
        print("yes" if inside else "no")
        return EXIT_OK
    if args.basis:
        for w in stallings.generating_set(core):
            print(w)
        return EXIT_OK
    edges = sum(1 for _ in core.edges())
    idx = stallings.index(core)
    print(f"vertices {core.n_vertices}")
    print(f"edges {edges}")
    print(f"subgroup rank {edges - core.n_vertices + 1}")
    print(f"index {idx.value if idx.finite else 'infinite'}")
    return EXIT_OK


def _print_ball_counts(bl) -> None:
    total = 0
    for radius, count in enumerate(bl.counts):
        total += count
        print(f"{radius} {count} {total}")


def _cmd_ball(args) -> int:
    phi = _load_automorphism(args.aut)
    try:
        bl = extension.ball(phi, args.radius, args.max_states)
    except ResourceCapError as exc:
        _print_ball_counts(exc.partial)
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    _print_ball_counts(bl)
    return EXIT_OK


def _cmd_distortion(args) -> int:
    phi = _load_automorphism(args.aut)
    subject = None
    if args.subject is not None:
        subject = parse_words(args.subject, phi.rank)
    profile = extension.distortion_profile(
        subject, phi, args.radius,
        max_states=args.max_states, intrinsic_cap=args.intrinsic_cap)
    print(f"subject {profile.subject_label}")
    for row in profile.rows:
        print(f"{row.radius} {row.count} {row.disto}")
    return EXIT_OK


def _verdict_exit(report) -> int:
    if report.verdict == lab.INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _cmd_pipeline(args, kind: str) -> int:
    config = lab.parse_config(args.config)
    if config.kind != kind:
        raise LaminaError(
            f"config declares kind {config.kind}, but the {kind} "
            f"subcommand was invoked; use `lamina report` to follow "
            f"the config")
    report = lab.run_experiment(config)
    print(lab.render_text(report), end="")
    return _verdict_exit(report)


def _cmd_report(args) -> int:
    config = lab.parse_config(args.config)
    report = lab.run_experiment(config)
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    paths = lab.emit(report, formats, args.out, figures=args.figures)
    for path in paths:
        print(path)
    print(f"verdict: {report.verdict}")
    return _verdict_exit(report)


def build_parser() -> _Parser:
    parser = _Parser(prog="lamina", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"lamina {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_Parser)

    p = sub.add_parser("word", help="reduce a word")
    p.add_argument("word")
    p.add_argument("--rank", type=int, default=None,
                   help="restrict letters to the first RANK generators")
    p.add_argument("--invert", action="store_true")
    p.add_argument("--length", action="store_true",
                   help="print the letter count instead of the word")
    p.set_defaults(func=_cmd_word)

    p = sub.add_parser("aut", help="inspect or apply an automorphism file")
    p.add_argument("file")
    p.add_argument("--word", default=None, help="apply to this word")
    p.add_argument("-n", type=int, default=1, help="iteration count")
    p.add_argument("--invert", action="store_true",
                   help="use the inverse automorphism")
    p.set_defaults(func=_cmd_aut)

    p = sub.add_parser("leaf", help="print a leaf segment")
    p.add_argument("--aut", default=None, help="automorphism file (rose map)")
    p.add_argument("--map", default=None, help="graph map file")
    p.add_argument("--edge", default="a", help="starting direction")
    p.add_argument("-n", type=int, default=1, help="iterate of the map")
    p.set_defaults(func=_cmd_leaf, needs_map=True)

    p = sub.add_parser("subgroup", help="fold and query a core graph")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--gens", required=True,
                   help="comma-separated generator words")
    p.add_argument("--member", default=None, help="test this word")
    p.add_argument("--basis", action="store_true",
                   help="print a free basis of the subgroup")
    p.set_defaults(func=_cmd_subgroup)

    p = sub.add_parser("ball", help="count extension elements by length")
    p.add_argument("--aut", required=True)
    p.add_argument("-r", "--radius", type=int,
                   default=extension.DEFAULT_RADIUS)
    p.add_argument("--max-states", type=int, default=None)
    p.set_defaults(func=_cmd_ball)

    p = sub.add_parser("distortion", help="distortion profile of a subgroup")
    p.add_argument("--aut", required=True)
    p.add_argument("--subject", default=None,
                   help="comma-separated generators; omit for the fiber")
    p.add_argument("-r", "--radius", type=int,
                   default=extension.DEFAULT_RADIUS)
    p.add_argument("--max-states", type=int, default=None)
    p.add_argument("--intrinsic-cap", type=int,
                   default=extension.DEFAULT_INTRINSIC_CAP)
    p.set_defaults(func=_cmd_distortion)

    for kind, name in (("filling", "filling"), ("quasiconvexity", "qc"),
                       ("factor", "factor")):
        p = sub.add_parser(name, help=f"run a {kind} config and print it")
        p.add_argument("config")
        p.set_defaults(func=lambda a, k=kind: _cmd_pipeline(a, k))

    p = sub.add_parser("report", help="run a config and write report files")
    p.add_argument("config")
    p.add_argument("--out", default="reports", help="output directory")
    p.add_argument("--format", default="json,csv,text",
                   help="comma-separated subset of json, csv, text")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction,
                   default=True, help="render PNG summaries")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "func"):
        parser.print_help()
        return EXIT_ERROR
    if getattr(args, "needs_map", False) and not (args.aut or args.map):
        print("usage error: leaf needs --aut or --map", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except HypothesisViolationError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS_VIOLATION
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (LaminaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
