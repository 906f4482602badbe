"""Command line: build, merge, query, plan, validate.

Exit codes: 0 ok, 1 usage, 2 I/O or unreadable sketch, 3 incompatible
sketches, 4 a validation suite found a violated guarantee.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Iterator

from . import ci, mc
from .errors import ConfigError, DomainError, FormatError, MergeError
from .sketch import Sketch, SketchParams

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INCOMPATIBLE, EXIT_VALIDATION = 0, 1, 2, 3, 4

QUERY_KEYS = ("lower", "upper", "alpha", "mean_y", "h_d", "h_u", "p0", "a0", "mode")
PLAN_KEYS = ("alpha", "a0", "minlen", "h_d", "h_u", "p_plus", "p_minus")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; we reserve 2 for I/O
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _json_num(v):
    if v is None or (isinstance(v, float) and math.isinf(v)):
        return None
    return v


def _emit(obj: dict, keys) -> None:
    sys.stdout.write(json.dumps({k: _json_num(obj[k]) for k in keys}) + "\n")


def iter_tokens(stream) -> Iterator[bytes]:
    """Newline-delimited tokens from a binary stream; only b"\\n" is removed."""
    for line in stream:
        yield line[:-1] if line.endswith(b"\n") else line


# ---------------------------------------------------------------------------
# subcommands


def cmd_build(args) -> int:
    try:
        sk = Sketch.new(args.r0, args.c0, args.z0)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    count = 0

    def counted(tokens):
        nonlocal count
        for tok in tokens:
            count += 1
            yield tok

    inputs = args.inputs or ["-"]
    for path in inputs:
        if path == "-":
            sk.update(counted(iter_tokens(sys.stdin.buffer)))
        else:
            with open(path, "rb") as fh:
                sk.update(counted(iter_tokens(fh)))
    sk.save(args.out)
    print(f"tokens processed: {count}", file=sys.stderr)
    if sk.warnings:
        print(f"capacity warnings: {sk.warnings}", file=sys.stderr)
    return EXIT_OK


def cmd_merge(args) -> int:
    if len(args.inputs) < 2:
        raise UsageError("merge needs at least two input sketches")
    sketches = [Sketch.load(p) for p in args.inputs]
    out = sketches[0]
    for other in sketches[1:]:
        out = out.merge(other)
    out.save(args.out)
    return EXIT_OK


def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise UsageError(f"--alpha must lie in (0, 1), got {alpha}")
    return alpha


def cmd_query(args) -> int:
    alpha = _check_alpha(args.alpha)
    sk = Sketch.load(args.file)
    try:
        iv = ci.interval(sk.query(), sk.params, alpha, args.mode, args.split, args.lower_slack)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    pl = iv.plan
    _emit(
        {
            "lower": iv.lower,
            "upper": iv.upper,
            "alpha": alpha,
            "mean_y": iv.mean_y,
            "h_d": pl.h_d,
            "h_u": pl.h_u,
            "p0": iv.p0,
            "a0": sk.params.a0,
            "mode": args.mode,
        },
        QUERY_KEYS,
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    alpha = _check_alpha(args.alpha)
    try:
        params = SketchParams(args.r0, args.c0, 0)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc
    mode = "two-sided-minlen" if args.minlen else "two-sided"
    pl = ci.plan(alpha, params.a0, mode)
    _emit(
        {
            "alpha": alpha,
            "a0": params.a0,
            "minlen": bool(args.minlen),
            "h_d": pl.h_d,
            "h_u": pl.h_u,
            "p_plus": pl.p_plus,
            "p_minus": pl.p_minus,
        },
        PLAN_KEYS,
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    failed = []
    if args.suite == "pvalues":
        reports = []
        for F0 in args.F0 or [500]:
            for r0 in args.r0_list:
                for c0 in args.c0_list:
                    cfg = mc.McConfig(
                        r0=r0, c0=c0, F0=F0, p_plus=args.p, p_minus=args.p,
                        samples=args.samples or mc.DEFAULT_PVALUE_SAMPLES, seed=args.seed,
                    )
                    reports.extend(mc.simulate_pvalues(cfg))
        for r in reports:
            r.extra["imprecision"] = r.imprecision
        failed = [r for r in reports if not r.extra["dominated"]]
    elif args.suite == "coverage":
        reports = []
        grid = [(r0, c0) for r0 in args.r0_list for c0 in args.c0_list]
        for F0 in args.F0 or [500]:
            reports.extend(
                mc.coverage_experiment(
                    F0, grid, args.alpha, args.mode, z0=args.z0,
                    samples=args.samples or mc.DEFAULT_COVERAGE_SAMPLES, seed=args.seed,
                )
            )
        for r in reports:
            r.extra["ok"] = r.ci3sigma_hi >= r.analytic_value
        failed = [r for r in reports if not r.extra["ok"]]
    else:
        reports = mc.gumbel_mgf_check(
            tuple(args.F0 or (100, 10_000, 1_000_000)),
            tuple(args.t),
            samples=args.samples or 200_000,
            seed=args.seed,
        )
    if args.csv in (None, "-"):
        mc.write_csv(reports, sys.stdout)
    else:
        mc.write_csv(reports, args.csv)
    if failed:
        print(f"{len(failed)} row(s) violate the guarantee", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fmci", description="Distinct-count sketches with confidence intervals.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="sketch newline-delimited tokens")
    b.add_argument("--r0", type=int, default=4, help="log2 of the number of rows (default 4)")
    b.add_argument("--c0", type=int, default=4, help="number of hash columns (default 4)")
    b.add_argument("--z0", type=int, default=4, help="tie-break bits per register (default 4)")
    b.add_argument("--out", required=True, help="output sketch file")
    b.add_argument("inputs", nargs="*", help="token files; '-' or none reads stdin")
    b.set_defaults(func=cmd_build)

    m = sub.add_parser("merge", help="union of sketch files")
    m.add_argument("--out", required=True)
    m.add_argument("inputs", nargs="+")
    m.set_defaults(func=cmd_merge)

    q = sub.add_parser("query", help="confidence interval from a sketch file")
    q.add_argument("--alpha", type=float, default=0.95)
    q.add_argument("--mode", choices=ci.MODES, default="upper")
    q.add_argument("--split", type=float, default=None,
                   help="share of 1-alpha given to the lower-endpoint tail (two-sided)")
    q.add_argument("--lower-slack", action="store_true",
                   help="also widen the lower endpoint by the 2^-z0 truncation slack")
    q.add_argument("file")
    q.set_defaults(func=cmd_query)

    pl = sub.add_parser("plan", help="half-widths for a register count, no data needed")
    pl.add_argument("--alpha", type=float, default=0.95)
    pl.add_argument("--r0", type=int, default=4)
    pl.add_argument("--c0", type=int, default=4)
    pl.add_argument("--minlen", action="store_true", help="shortest two-sided split")
    pl.set_defaults(func=cmd_plan)

    v = sub.add_parser("validate", help="Monte Carlo validation suites, CSV output")
    v.add_argument("--suite", choices=("pvalues", "coverage", "gumbel"), required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--csv", default=None, help="output path (default stdout)")
    v.add_argument("--r0-list", type=_int_list, default=[0, 1, 2, 3, 4])
    v.add_argument("--c0-list", type=_int_list, default=[1, 2, 3, 4])
    v.add_argument("--F0", type=_int_list, default=None, help="comma-separated F0 values")
    v.add_argument("--p", type=float, default=0.1, help="target tail for pvalues")
    v.add_argument("--alpha", type=_float_list, default=[0.9])
    v.add_argument("--mode", type=lambda s: s.split(","), default=["upper"])
    v.add_argument("--z0", type=int, default=4)
    v.add_argument("--t", type=_float_list, default=[0.0, 0.1, 0.2, 0.3, 0.4],
                   help="gumbel: s / ln 2 values")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate":
        if args.samples is not None and args.samples < 1:
            parser.error("--samples must be >= 1")
        bad = [m for m in args.mode if m not in ci.MODES]
        if bad:
            parser.error(f"unknown mode(s): {', '.join(bad)}")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fmci: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MergeError as exc:
        print(f"fmci: incompatible sketches: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (OSError, FormatError) as exc:
        print(f"fmci: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
