"""Command-line driver: ``flc <parse|tree|transform|eval|diff|bench> [flags] FILE``."""

from __future__ import annotations

import argparse
import difflib
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .core import Program
from .deftree import DefTreeError, build_definitional_tree, classify_operation, render_tree
from .evaluator import EvalConfig, EvalError, EvalResult, evaluate
from .parser import ParseError, parse_program
from .pretty import pretty_print
from .transform import (
    SCHEMES, ReplacementError, TransformError, strip_defaults, transform,
    transform_replace_with_report,
)

EXIT_OK, EXIT_ERROR, EXIT_NO_VALUES, EXIT_BUDGET = 0, 1, 2, 3
CORPUS_DIR = Path(__file__).parent / "corpus"


class CliError(Exception):
    pass


def resolve_file(name: str) -> Path:
    """Resolve a program path, falling back to the bundled corpus."""
    path = Path(name)
    if path.exists():
        return path
    bundled = CORPUS_DIR / path.name
    if bundled.exists() and (path.parent.name in ("", "examples")):
        return bundled
    raise CliError(f"no such file: {name}")


def load_program(name: str) -> Program:
    path = resolve_file(name)
    try:
        return parse_program(path.read_text(encoding="utf-8"))
    except ParseError as exc:
        raise CliError(f"{path}:{exc}") from None


def parse_int_range(text: str) -> tuple:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            raise ValueError
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None
    if lo_i > hi_i:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo_i, hi_i


def scheme_program(p: Program, scheme: str, fallback: bool = False) -> Program:
    if scheme == "none":
        return strip_defaults(p)
    return transform(p, scheme, fallback)


@dataclass
class RunReport:
    goal: str
    scheme: str
    values: list = field(default_factory=list)
    steps: int = 0
    set_evals: int = 0
    rule_apps_standard: int = 0
    rule_apps_default: int = 0
    generator_instantiations: int = 0
    status: int = EXIT_OK
    seconds: float = 0.0

    @classmethod
    def from_result(cls, goal: str, scheme: str, r: EvalResult, seconds: float) -> "RunReport":
        c = r.counters
        values = sorted((a.value_text, a.bindings_text) for a in r.answers)
        if values:
            status = EXIT_OK
        else:
            status = EXIT_BUDGET if r.cut else EXIT_NO_VALUES
        return cls(goal, scheme, values, c.steps, c.set_evals, c.rule_apps_standard,
                   c.rule_apps_default, c.generator_instantiations, status, seconds)

    def lines(self) -> list:
        return [f"{b} {v}" if b else v for v, b in self.values]


def run_goal(p: Program, goal: str, scheme: str, args) -> RunReport:
    config = make_config(args)
    start = time.perf_counter()
    result = evaluate(scheme_program(p, scheme, getattr(args, "fallback", False)), goal, config)
    return RunReport.from_result(goal, scheme, result, time.perf_counter() - start)


def make_config(args) -> EvalConfig:
    return EvalConfig(strategy=args.strategy, value_limit=args.limit, step_limit=args.steps,
                      int_range=args.int_range)


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args) -> int:
    sys.stdout.write(pretty_print(load_program(args.file)))
    return EXIT_OK


def cmd_tree(args) -> int:
    p = load_program(args.file)
    names = [args.op] if args.op else list(p.operations)
    out = []
    for name in names:
        op = p.operations.get(name)
        if op is None:
            raise CliError(f"unknown operation {name}")
        if not op.standard_rules:
            continue
        kind = classify_operation(op, p)
        out.append(f"-- {name}: {kind.kind}")
        try:
            out.append(render_tree(build_definitional_tree(op, p)).rstrip("\n"))
        except DefTreeError as exc:
            out.append(f"-- {exc}")
    sys.stdout.write("\n".join(out) + ("\n" if out else ""))
    return EXIT_OK


def cmd_transform(args) -> int:
    p = load_program(args.file)
    if args.scheme == "replace":
        try:
            q, report = transform_replace_with_report(p, args.fallback)
        except ReplacementError as exc:
            for line in exc.report:
                print(line, file=sys.stderr)
            raise CliError(str(exc)) from None
        for line in report:
            print(line, file=sys.stderr)
    else:
        q = transform(p, args.scheme)
    sys.stdout.write(pretty_print(q))
    return EXIT_OK


def cmd_eval(args) -> int:
    p = load_program(args.file)
    report = run_goal(p, args.expr, args.scheme, args)
    for line in report.lines():
        print(line)
    if report.status == EXIT_BUDGET:
        print("budget exhausted before any value was found", file=sys.stderr)
    return report.status


def _schemes(text: str) -> list:
    schemes = [s.strip() for s in text.split(",") if s.strip()]
    for s in schemes:
        if s not in SCHEMES + ("none",):
            raise CliError(f"unknown scheme {s}")
    return schemes


def cmd_diff(args) -> int:
    p = load_program(args.file)
    runs = {}
    for scheme in _schemes(args.schemes):
        try:
            runs[scheme] = run_goal(p, args.expr, scheme, args)
        except ReplacementError as exc:
            print(f"{scheme}: skipped ({exc})")
            continue
    if not runs:
        raise CliError("no scheme could be evaluated")
    for scheme, r in runs.items():
        if r.status == EXIT_BUDGET:
            raise CliError(f"{scheme}: budget exhausted")
    (ref_name, ref), *rest = runs.items()
    equal = True
    for name, r in rest:
        if r.lines() != ref.lines():
            equal = False
            diff = difflib.unified_diff(ref.lines(), r.lines(), ref_name, name, lineterm="")
            print("\n".join(diff))
    if equal:
        print("EQUAL")
        return EXIT_OK
    return EXIT_ERROR


BENCH_COLUMNS = ("goal", "scheme", "values", "steps", "set_evals", "rules_std", "rules_dflt",
                 "status", "seconds")


def cmd_bench(args) -> int:
    p = load_program(args.file)
    goals = args.expr or []
    if not goals:
        raise CliError("bench needs at least one goal (-e)")
    rows = []
    for goal in goals:
        for scheme in _schemes(args.schemes):
            try:
                r = run_goal(p, goal, scheme, args)
                rows.append([goal, scheme, str(len(r.values)), str(r.steps), str(r.set_evals),
                             str(r.rule_apps_standard), str(r.rule_apps_default),
                             str(r.status), f"{r.seconds:.3f}"])
            except (TransformError, EvalError) as exc:
                rows.append([goal, scheme, "-", "-", "-", "-", "-", "error", "-"])
                print(f"{goal} [{scheme}]: {exc}", file=sys.stderr)
    table = [list(BENCH_COLUMNS)] + rows
    if args.tsv:
        for row in table:
            print("\t".join(row))
    else:
        widths = [max(len(row[i]) for row in table) for i in range(len(BENCH_COLUMNS))]
        for row in table:
            print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    # usage errors share exit status 1 with parse errors; 2 means "no values"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flc", description="functional logic programs with "
                                     "default rules")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def eval_flags(p, multiple=False):
        if multiple:
            p.add_argument("-e", "--expr", action="append", help="goal expression (repeatable)")
        else:
            p.add_argument("-e", "--expr", required=True, help="goal expression")
        p.add_argument("--limit", type=int, default=100, help="maximum number of values")
        p.add_argument("--steps", type=int, default=100_000, help="step budget per alternative")
        p.add_argument("--strategy", choices=("bfs", "dfs"), default="bfs")
        p.add_argument("--int-range", type=parse_int_range, default=None, metavar="LO..HI",
                       help="domain for narrowing integer free variables")
        p.add_argument("--fallback", action="store_true",
                       help="use the basic scheme where replacement is inapplicable")

    p = sub.add_parser("parse", help="parse and pretty-print a program")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("tree", help="show definitional trees")
    p.add_argument("--op", help="only this operation")
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("transform", help="eliminate default rules")
    p.add_argument("--scheme", choices=SCHEMES, default="basic")
    p.add_argument("--fallback", action="store_true",
                   help="use the basic scheme where replacement is inapplicable")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("eval", help="evaluate a goal")
    p.add_argument("--scheme", choices=SCHEMES + ("none",), default="basic")
    eval_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diff", help="compare value sets across schemes")
    p.add_argument("--schemes", default="basic,cont,replace")
    eval_flags(p)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("bench", help="counter table of goals under several schemes")
    p.add_argument("--schemes", default="basic,cont,replace")
    p.add_argument("--tsv", action="store_true", help="tab-separated output")
    eval_flags(p, multiple=True)
    p.set_defaults(func=cmd_bench)

    for action in sub.choices.values():
        action.add_argument("file", help="program file (.flc)")
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, TransformError, EvalError, ParseError, ValueError) as exc:
        print(f"flc: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except RecursionError:
        print("flc: error: expression too deeply nested", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
