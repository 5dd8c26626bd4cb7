"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 resource (memory budget), 4 domain/range/input.
Output is rendered completely before anything is written, so an error never
leaves partial output behind.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from fractions import Fraction

from . import analysis, bsets, sieve, sumset
from .errors import DomainError, RomanoffError, ResourceError

MEMORY_ENV = "ROMANOFF_MEMORY_BUDGET"


@dataclass(frozen=True)
class RunConfig:
    limit: int | None
    segment_bits: int = sieve.DEFAULT_SEGMENT_BITS
    memory_budget_bytes: int = sieve.DEFAULT_MEMORY_BUDGET
    output_format: str = "csv"
    output_path: str | None = None


class UsageError(Exception):
    pass


def config_from_args(args) -> RunConfig:
    if args.limit is not None and args.limit < 2:
        raise UsageError("--limit must be at least 2")
    if not sieve.MIN_SEGMENT_BITS <= args.segment_bits <= sieve.MAX_SEGMENT_BITS:
        raise UsageError(
            f"--segment-bits must lie in [{sieve.MIN_SEGMENT_BITS}, {sieve.MAX_SEGMENT_BITS}]"
        )
    budget = args.memory_budget if args.memory_budget is not None else _env_budget()
    return RunConfig(args.limit, args.segment_bits, budget, args.format, args.output)


# -- parsing helpers ---------------------------------------------------------


def parse_int(text: str) -> int:
    """Integer with optional scientific notation, e.g. 1e6."""
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not d.is_finite() or d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(d)


def parse_grid(text: str) -> list[int]:
    return [parse_int(part) for part in text.split(",") if part.strip()]


def parse_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    return parse_int(lo), parse_int(hi)


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


# -- rendering ---------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def render(columns, rows, fmt: str, header: bool) -> str:
    buf = io.StringIO()
    if fmt == "jsonl":
        for row in rows:
            buf.write(json.dumps({c: _json(v) for c, v in zip(columns, row)}) + "\n")
        return buf.getvalue()
    if header:
        buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    return buf.getvalue()


def emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".romanoff-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- commands ----------------------------------------------------------------


def _table(args, need: int) -> sieve.PrimeTable:
    cfg = args.config
    limit = cfg.limit if cfg.limit is not None else max(need, 2)
    if limit < need:
        raise UsageError(f"--limit {limit} is below the required {need}")
    return sieve.build_prime_table(limit, cfg.segment_bits, cfg.memory_budget_bytes)


def _spec(args) -> bsets.BSetSpec:
    zero = not args.no_zero_exponent
    if args.powers_of_two:
        return bsets.BSetSpec.powers_of_two(zero)
    if args.two_pow_squares:
        return bsets.BSetSpec.two_pow_squares(zero)
    if args.theorem2:
        if args.m is None:
            raise UsageError("--theorem2 needs --m")
        if args.m < 2:
            raise UsageError("--m must be at least 2")
        return bsets.BSetSpec.theorem_two(args.m)
    return bsets.BSetSpec.from_file(args.explicit)


def _require_grid(grid):
    if not grid:
        raise UsageError("--grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("--grid must be strictly ascending")
    return grid


def _nth_prime_bound(i: int) -> int:
    if i < 6:
        return 13
    return int(i * (math.log(i) + math.log(math.log(i)))) + 1


def cmd_sieve(args):
    need = max([2, *args.pi, *args.theta, *args.mertens, *(_nth_prime_bound(i) for i in args.nth if i > 0)])
    t = _table(args, need)
    rows = []
    for x in args.pi:
        rows.append([f"pi({x})", sieve.prime_count(t, x)])
    for x in args.theta:
        rows.append([f"theta({x})", f"{sieve.chebyshev_theta(t, x):.6f}"])
    for y in args.mertens:
        rows.append([f"mertens({y})", f"{sieve.mertens_product(t, y):.12f}"])
    for i in args.nth:
        rows.append([f"p({i})", sieve.nth_prime(t, i)])
    return ["query", "value"], rows


def cmd_pairs(args):
    for h in args.h:
        if h < 2 or h % 2:
            raise UsageError(f"--h values must be positive and even, got {h}")
    t = _table(args, args.x)
    rows = []
    for h in args.h:
        r = sieve.prime_pair_count(t, args.x, h)
        rows.append([r.x, r.h, r.count, r.bound_rhs, r.ratio])
    return ["x", "h", "count", "bound_rhs", "ratio"], rows


def cmd_bset(args):
    spec = _spec(args)
    t = _table(args, 64)
    if args.enumerate:
        return ["b"], [[b] for b in bsets.enumerate_bset(t, spec, args.x)]
    return ["count"], [[bsets.bset_count(t, spec, args.x)]]


def cmd_blocks(args):
    t = _table(args, 64)
    rows = [bsets.theorem2_block(t, args.m, j).csv_row() for j in range(1, args.jmax + 1)]
    return list(bsets.BLOCK_CSV_HEADER), rows


def cmd_ccond(args):
    spec = _spec(args)
    grid = _require_grid(args.grid)
    t = _table(args, 64)
    rep = bsets.c_condition_report(t, spec, args.c, grid)
    rows = [[r.x, r.cx, r.count_cx, r.count_x, r.ratio, float(r.ratio)] for r in rep.rows]
    return ["x", "cx", "B_cx", "B_x", "ratio", "ratio_float"], rows


def cmd_moments(args):
    spec = _spec(args)
    t = _table(args, args.x)
    st = sumset.moments(t, spec, args.x, args.alpha)
    return list(sumset.REPSTATS_CSV_HEADER), [st.csv_row()]


def cmd_thm1(args):
    spec = _spec(args)
    grid = _require_grid(args.grid)
    t = _table(args, grid[-1])
    rep = analysis.theorem1_report(t, spec, args.alpha, grid)
    return rep.columns, rep.rows


def cmd_thm2(args):
    grid = _require_grid(args.grid)
    t = _table(args, grid[-1] if not args.no_sumset else 1 << 16)
    rep = analysis.theorem2_report(t, args.m, grid, args.s, with_sumset=not args.no_sumset)
    return rep.columns, rep.rows


def cmd_partition(args):
    t = _table(args, args.x)
    return list(analysis.PARTITION_CSV_HEADER), [analysis.theorem2_partition(t, args.m, args.s, args.x).csv_row()]


def cmd_chebyshev(args):
    need = max(64, int(args.ell_max * (math.log(args.ell_max + 2) + math.log(math.log(args.ell_max + 3)) + 2)))
    t = _table(args, need)
    tab = analysis.chebyshev_bound_check(t, args.ell_min, args.ell_max)
    rows = [[r.ell, r.theta_ell, r.upper_rhs, r.upper_ok, r.theta_prev, r.lower_rhs, r.lower_ok]
            for r in tab.rows]
    return list(analysis.CHEBYSHEV_CSV_HEADER), rows


def cmd_e1(args):
    spec = _spec(args)
    grid = _require_grid(args.grid)
    t = _table(args, grid[-1])
    rep = analysis.e1_diagnostic(t, spec, grid)
    return rep.columns, rep.rows


def cmd_polignac(args):
    lo, hi = args.odd_range
    t = _table(args, max(hi, 5))
    zero = not args.no_zero_exponent
    rows = []
    for n in range(max(lo, 5) | 1, hi + 1, 2):
        if not analysis.polignac_check(t, n, zero):
            rows.append([n])
    return ["n"], rows


# -- argument parser ---------------------------------------------------------


def _env_budget() -> int:
    raw = os.environ.get(MEMORY_ENV)
    if not raw:
        return sieve.DEFAULT_MEMORY_BUDGET
    try:
        return parse_int(raw)
    except argparse.ArgumentTypeError:
        raise UsageError(f"{MEMORY_ENV} is not an integer: {raw!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--limit", type=parse_int, help="sieve bound (default: what the command needs)")
    common.add_argument("--segment-bits", type=parse_int, default=sieve.DEFAULT_SEGMENT_BITS)
    common.add_argument("--memory-budget", type=parse_int, default=None,
                        help=f"bytes; overrides ${MEMORY_ENV}")
    common.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    common.add_argument("--output", help="write here atomically instead of stdout")
    common.add_argument("--header", action="store_true", help="emit a CSV header line")

    bset_opts = argparse.ArgumentParser(add_help=False)
    g = bset_opts.add_mutually_exclusive_group(required=True)
    g.add_argument("--powers-of-two", action="store_true")
    g.add_argument("--two-pow-squares", action="store_true")
    g.add_argument("--theorem2", action="store_true", help="primorial-block set, needs --m")
    g.add_argument("--explicit", metavar="PATH")
    bset_opts.add_argument("--no-zero-exponent", action="store_true", help="exclude 2**0 = 1")

    p = argparse.ArgumentParser(prog="romanoff", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sieve", parents=[common], help="pi, theta, Mertens products")
    s.add_argument("--pi", type=parse_int, action="append", default=[])
    s.add_argument("--theta", type=parse_int, action="append", default=[])
    s.add_argument("--mertens", type=parse_int, action="append", default=[])
    s.add_argument("--nth", type=parse_int, action="append", default=[])
    s.set_defaults(func=cmd_sieve)

    s = sub.add_parser("pairs", parents=[common], help="prime pairs with difference h")
    s.add_argument("--x", type=parse_int, required=True)
    s.add_argument("--h", type=parse_grid, required=True)
    s.set_defaults(func=cmd_pairs)

    s = sub.add_parser("bset", parents=[common, bset_opts], help="count or list B up to x")
    s.add_argument("--m", type=parse_int)
    s.add_argument("--x", type=parse_int, required=True)
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--count", action="store_true")
    mode.add_argument("--enumerate", action="store_true")
    s.set_defaults(func=cmd_bset)

    s = sub.add_parser("blocks", parents=[common], help="primorial blocks as CSV")
    s.add_argument("--m", type=parse_int, required=True)
    s.add_argument("--jmax", type=parse_int, required=True)
    s.set_defaults(func=cmd_blocks)

    s = sub.add_parser("ccond", parents=[common, bset_opts], help="ratios B(cx)/B(x)")
    s.add_argument("--m", type=parse_int)
    s.add_argument("--c", type=parse_fraction, required=True)
    s.add_argument("--grid", type=parse_grid, required=True)
    s.set_defaults(func=cmd_ccond)

    s = sub.add_parser("moments", parents=[common, bset_opts], help="moments of the truncated representation function")
    s.add_argument("--m", type=parse_int)
    s.add_argument("--x", type=parse_int, required=True)
    s.add_argument("--alpha", type=parse_fraction, required=True)
    s.set_defaults(func=cmd_moments)

    s = sub.add_parser("thm1", parents=[common, bset_opts], help="second-moment lower-bound report")
    s.add_argument("--m", type=parse_int)
    s.add_argument("--alpha", type=parse_fraction, required=True)
    s.add_argument("--grid", type=parse_grid, required=True)
    s.set_defaults(func=cmd_thm1)

    s = sub.add_parser("thm2", parents=[common], help="primorial-block construction report")
    s.add_argument("--m", type=parse_int, required=True)
    s.add_argument("--grid", type=parse_grid, required=True)
    s.add_argument("--s", type=parse_int)
    s.add_argument("--no-sumset", action="store_true", help="skip S(x) and the partition")
    s.set_defaults(func=cmd_thm2)

    s = sub.add_parser("partition", parents=[common], help="three-part pair split")
    s.add_argument("--m", type=parse_int, required=True)
    s.add_argument("--s", type=parse_int, required=True)
    s.add_argument("--x", type=parse_int, required=True)
    s.set_defaults(func=cmd_partition)

    s = sub.add_parser("chebyshev", parents=[common], help="primorial size bounds per l")
    s.add_argument("--ell-min", type=parse_int, default=2)
    s.add_argument("--ell-max", type=parse_int, required=True)
    s.set_defaults(func=cmd_chebyshev)

    s = sub.add_parser("e1", parents=[common, bset_opts], help="two-sided sumset ratios")
    s.add_argument("--m", type=parse_int)
    s.add_argument("--grid", type=parse_grid, required=True)
    s.set_defaults(func=cmd_e1)

    s = sub.add_parser("polignac", parents=[common], help="odd n that are not p + 2^k")
    s.add_argument("--odd-range", type=parse_range, required=True)
    s.add_argument("--no-zero-exponent", action="store_true")
    s.set_defaults(func=cmd_polignac)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config = cfg = config_from_args(args)
        columns, rows = args.func(args)
        text = render(columns, rows, cfg.output_format, args.header)
        emit(text, cfg.output_path)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"romanoff: error: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"romanoff: resource error: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"romanoff: {exc}", file=sys.stderr)
        return 4
    except RomanoffError as exc:
        print(f"romanoff: internal check failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
