"""Command-line entry point: ``verify``, ``eval`` and ``table``.

Exit codes: 0 when every case passes, 1 when any case fails or errors,
2 for usage and configuration errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Dict, List, Optional

from . import complex_gamma as cg
from .dickson import dickson_eval
from .errors import ConfigError, DicksonGammaError
from .harness import SuiteConfig, convergence_table, default_suite, parse_complex, run_suite
from .identities import IdentityCase, lhs_series, rhs_closed
from .series import TruncationPolicy

EXPRS = ("upper_gamma", "lower_gamma", "dickson_first", "dickson_second", "theorem_lhs", "theorem_rhs")


class UsageError(Exception):
    pass


def format_complex(z: complex) -> str:
    """17 significant digits; the imaginary part is omitted when it is exactly zero."""
    z = complex(z)

    def f(x: float) -> str:
        if math.isfinite(x) and x == int(x) and abs(x) < 1e17:
            return "%.17g" % x
        return "%#.17g" % x

    if z.imag == 0:
        return f(z.real)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{f(z.real)}{sign}{f(abs(z.imag))}i"


def _parse_bindings(items: List[str]) -> Dict[str, complex]:
    out = {}
    for item in items:
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise UsageError(f"expected name=value, got {part!r}")
            k, v = part.split("=", 1)
            try:
                out[k.strip()] = parse_complex(v)
            except ConfigError as exc:
                raise UsageError(str(exc)) from None
    return out


def _num(s: str) -> complex:
    try:
        return parse_complex(s)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise UsageError(f"expected an integer, got {s!r}") from None


def _policy(args) -> Optional[TruncationPolicy]:
    if args.mode is None:
        return None
    kw = {"mode": args.mode}
    if args.max_n is not None:
        kw["max_n"] = args.max_n
    if args.tol is not None:
        kw["tol"] = args.tol
    return TruncationPolicy.from_dict(kw)


def cmd_eval(args) -> int:
    expr, rest = args.expr, args.args
    arity = {"upper_gamma": 2, "lower_gamma": 2, "dickson_first": 3, "dickson_second": 3}
    if expr in arity:
        if len(rest) != arity[expr]:
            raise UsageError(f"{expr} takes {arity[expr]} arguments, got {len(rest)}")
        if expr == "upper_gamma":
            v = cg.upper_incomplete(_num(rest[0]), _num(rest[1]))
        elif expr == "lower_gamma":
            v = cg.lower_incomplete(_num(rest[0]), _num(rest[1]))
        else:
            kind = "first" if expr == "dickson_first" else "second"
            v = dickson_eval(kind, _int(rest[0]), _num(rest[1]), _num(rest[2]))
        print(format_complex(v))
        return 0
    if not rest:
        raise UsageError(f"{expr} needs a case id followed by name=value bindings")
    try:
        case = IdentityCase(rest[0], _parse_bindings(rest[1:]), args.variant)
    except DicksonGammaError as exc:
        raise UsageError(str(exc)) from None
    if expr == "theorem_rhs":
        print(format_complex(rhs_closed(case)))
        return 0
    res = lhs_series(case, _policy(args))
    print(format_complex(res.value))
    print(f"error estimate: {res.abs_err_estimate:.3e} terms: {res.terms_used} terminated: {res.terminated}")
    return 0


def cmd_verify(args) -> int:
    if args.config:
        cfg = SuiteConfig.load(args.config)
    else:
        cfg = default_suite()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = args.out or cfg.output_path or "report.jsonl"
    summary, records = run_suite(cfg, out, jobs=args.jobs)
    for r in records:
        if r["error"] is not None:
            print(f"ERROR {r['case']}#{r['draw']}: {r['error']}")
        elif not r["pass"]:
            print(f"FAIL  {r['case']}#{r['draw']}: rel_residual={r['rel_residual']:.3e} threshold={r['threshold']:.1e}")
    print(summary.line())
    print(f"report: {out}")
    return summary.exit_code


def cmd_table(args) -> int:
    try:
        case = IdentityCase(args.case, _parse_bindings([args.params] if args.params else []), args.variant)
        ns = [int(n) for n in args.n.split(",") if n]
    except (DicksonGammaError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    table = convergence_table(case, ns)
    text = table.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if table.turnover is not None:
        print(f"turnover N={table.turnover} best={format_complex(table.best_value)}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dickson-gamma", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--config", help="suite JSON (default: built-in suite)")
    v.add_argument("--seed", type=int, help="override the suite seed")
    v.add_argument("--out", help="report path (overrides the config)")
    v.add_argument("--jobs", type=int, default=1, help="worker processes")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="evaluate one expression")
    e.add_argument("expr", choices=EXPRS)
    e.add_argument("args", nargs="*", help="positional numbers, or CASE name=value ...")
    e.add_argument("--variant", help="summand variant (T7, T8)")
    e.add_argument("--mode", help="truncation mode for theorem_lhs")
    e.add_argument("--max-n", type=int, dest="max_n")
    e.add_argument("--tol", type=float)
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("table", help="partial-sum convergence table as CSV")
    t.add_argument("--case", required=True)
    t.add_argument("--params", default="", help="k=0.5,a=2,...")
    t.add_argument("--n", required=True, help="comma-separated N values")
    t.add_argument("--variant")
    t.add_argument("--out")
    t.set_defaults(func=cmd_table)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DicksonGammaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
