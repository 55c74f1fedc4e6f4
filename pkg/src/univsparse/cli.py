"""Command-line front end: bound tables, bound surfaces, success-probability
curves, minimal-overcompleteness scans and a self-test driver.

Every command writes long-format CSV (17 significant digits, empty field plus a
``reason`` column for undefined values) or JSON, and is a pure function of its
arguments: rerunning with the same seed gives byte-identical files for any
``--threads``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, montecarlo, selftest
from .errors import ConfigurationError, ConvergenceError, DomainError, ScanLimitError
from .randmodel import ProblemInstance

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

PAIRS = (("dense", "omp"), ("dense", "group_omp"), ("block", "omp"), ("block", "group_omp"))
SURFACE_BOUNDS = ("wc_lower", "wc_upper_closed", "ac_lower", "ac_upper_closed")


class UsageError(ValueError):
    pass


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)


def fmt_number(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
    return v


def render(table: Table, fmt: str, meta: dict) -> str:
    if fmt == "json":
        rows = [{c: _json_value(r.get(c)) for c in table.columns} for r in table.rows]
        return json.dumps({**meta, "columns": table.columns, "rows": rows}, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([fmt_number(r.get(c)) for c in table.columns])
    return buf.getvalue()


def write_output(text: str, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------- config helpers

def _eps_from(args):
    if (args.eps is None) == (args.snr_db is None):
        raise UsageError("give exactly one of --eps and --snr-db")
    if args.eps is not None:
        return float(args.eps)
    return bounds.snr_db_to_eps(args.snr_db)


def _sparsity(args, d=None):
    have_s = getattr(args, "s", None) is not None
    have_k = getattr(args, "k", None) is not None
    if have_s == have_k:
        raise UsageError("give exactly one of --s and --k")
    if have_s:
        return float(args.s)
    if d is None:
        raise UsageError("--k needs --d")
    return args.k / d


def _linspace(lo, hi, points):
    if points < 2:
        raise UsageError(f"need at least 2 grid points, got {points}")
    return [float(v) for v in np.linspace(lo, hi, points)]


def _meta(args, command):
    cfg = {k: v for k, v in sorted(vars(args).items())
           if k not in ("threads", "out", "format", "func", "command", "trace_out")}
    return {"command": command, "config": cfg}


# ---------------------------------------------------------------- bounds

BOUND_COLUMNS = ["s_inv", "s", "eps", "snr_db", "bound", "value", "log10_value", "valid",
                 "constants", "flags", "reason"]


def _constants_str(c):
    return ";".join(f"{k}={fmt_number(v)}" for k, v in sorted(c.items()))


def bound_reports(r, delta=None, d=None, o=None, variant="derivation"):
    reports = [
        bounds.wc_lower(r),
        bounds.ac_lower(r),
        bounds.wc_upper_closed(r, variant),
        bounds.wc_upper_exact(r),
        bounds.ac_upper_closed(r),
    ]
    try:
        reports.append(bounds.ac_overcomp_exact(r, delta))
    except DomainError as exc:
        reports.append(bounds.BoundReport.invalid(bounds.BoundId.AC_OVERCOMP_EXACT, str(exc)))
    if d is not None and o is not None:
        reports.append(bounds.ac_success_upper(r, o, d))
        if delta is not None:
            reports.append(bounds.cantelli_success_lower_closed(r, delta, o, d))
    return reports


def _bound_rows(r, reports):
    rows = []
    for rep in reports:
        rows.append({
            "s_inv": r.s_inv, "s": r.s, "eps": r.eps, "snr_db": bounds.eps_to_snr_db(r.eps),
            "bound": rep.bound_id.value, "value": rep.value if rep.valid else None,
            "log10_value": rep.log10_value if rep.valid else None, "valid": rep.valid,
            "constants": _constants_str(rep.constants), "flags": ";".join(rep.flags),
            "reason": rep.violated_condition or "",
        })
    return rows


def cmd_bounds(args) -> Table:
    table = Table(list(BOUND_COLUMNS))
    if args.sweep is None:
        regimes = [bounds.RegimeParams(_sparsity(args), _eps_from(args))]
    else:
        if args.range_from is None or args.range_to is None:
            raise UsageError("--sweep needs --from and --to")
        grid = _linspace(args.range_from, args.range_to, args.points)
        if args.sweep == "s":
            eps = _eps_from(args)
            regimes = [bounds.RegimeParams(1.0 / v, eps) for v in grid]
        else:
            s = _sparsity(args)
            regimes = [bounds.RegimeParams.from_snr_db(s, v) for v in grid]
    for r in regimes:
        table.rows += _bound_rows(r, bound_reports(r, args.delta, args.d, args.o, args.variant))
    return table


def surface_table(s_grid, eps_grid) -> Table:
    table = Table(["s", "eps"] + [f"log10_{b}" for b in SURFACE_BOUNDS] + ["reason"])
    funcs = {
        "wc_lower": bounds.wc_lower,
        "wc_upper_closed": bounds.wc_upper_closed,
        "ac_lower": bounds.ac_lower,
        "ac_upper_closed": bounds.ac_upper_closed,
    }
    for eps in eps_grid:
        for s in s_grid:
            r = bounds.RegimeParams(s, eps)
            row = {"s": s, "eps": eps}
            reasons = []
            for name in SURFACE_BOUNDS:
                rep = funcs[name](r)
                row[f"log10_{name}"] = rep.log10_value if rep.valid else None
                if not rep.valid:
                    reasons.append(f"{name}: {rep.violated_condition}")
            row["reason"] = "; ".join(reasons)
            table.rows.append(row)
    return table


def cmd_surface(args) -> Table:
    s_grid = _linspace(args.s_from, args.s_to, args.s_points)
    eps_grid = _linspace(args.eps_from, args.eps_to, args.eps_points)
    return surface_table(s_grid, eps_grid)


# ---------------------------------------------------------------- simulate

SIM_COLUMNS = ["dict", "coder", "d", "k", "n", "o", "eps", "trials", "successes", "p_hat",
               "ci_low", "ci_high", "ac_success_upper", "cantelli_numeric", "cantelli_closed",
               "reason"]


def _parse_pairs(text):
    if text is None:
        return list(PAIRS)
    pairs = []
    for item in text.split(","):
        try:
            dk, ck = item.strip().split(":")
        except ValueError:
            raise UsageError(f"bad pair {item!r}; expected dict:coder") from None
        pairs.append((dk, ck))
    return pairs


def _o_grid(args):
    if args.o is not None and args.n is not None:
        raise UsageError("give at most one of --o and --n")
    if args.n is not None:
        return [n / args.d for n in args.n]
    if args.o is not None:
        return [float(v) for v in args.o]
    if args.o_from is None or args.o_to is None or args.o_step is None:
        raise UsageError("give --o, --n or all of --o-from, --o-to, --o-step")
    if args.o_step <= 0:
        raise UsageError("--o-step must be positive")
    count = int(math.floor((args.o_to - args.o_from) / args.o_step + 1e-9)) + 1
    return [args.o_from + i * args.o_step for i in range(count)]


def _overlay(r, inst, delta):
    row, reasons = {}, []
    row["ac_success_upper"] = bounds.ac_success_upper(r, inst.o, inst.d).value if inst.o > r.s else None
    if inst.n % inst.k == 0:
        mom = montecarlo.z_moments_quadrature(r.s, inst.n // inst.k)
        try:
            row["cantelli_numeric"] = bounds.cantelli_success_lower(mom.mu, mom.sigma2, r, inst.d)
        except DomainError as exc:
            reasons.append(f"cantelli_numeric: {exc}")
    else:
        reasons.append("cantelli_numeric: k does not divide n")
    if delta is None:
        reasons.append("cantelli_closed: no --delta given")
    else:
        rep = bounds.cantelli_success_lower_closed(r, delta, inst.o, inst.d)
        if rep.valid:
            row["cantelli_closed"] = rep.value
        else:
            reasons.append(f"cantelli_closed: {rep.violated_condition}")
    return row, reasons


def cmd_simulate(args) -> Table:
    eps = _eps_from(args)
    s = _sparsity(args, args.d)
    pairs = _parse_pairs(args.pairs)
    table = Table(list(SIM_COLUMNS))
    regime = bounds.RegimeParams(s, eps) if 0 < eps < 1 else None
    for o in _o_grid(args):
        inst = ProblemInstance.from_ratios(args.d, s, o)
        overlay, reasons = ({}, ["bounds need 0 < eps < 1"]) if regime is None else _overlay(
            regime, inst, args.delta)
        for dk, ck in pairs:
            est = montecarlo.estimate_success(inst, eps, dk, ck, args.trials, args.seed,
                                              args.fresh_dict, args.threads)
            table.rows.append({
                "dict": dk, "coder": ck, "d": inst.d, "k": inst.k, "n": inst.n, "o": inst.o,
                "eps": eps, "trials": est.trials, "successes": est.successes, "p_hat": est.p_hat,
                "ci_low": est.ci_low, "ci_high": est.ci_high, **overlay, "reason": "; ".join(reasons),
            })
    return table


# ---------------------------------------------------------------- scan

SCAN_COLUMNS = ["d", "k", "o_min", "trace_ref", "ac_lower", "ac_upper_closed"]
TRACE_COLUMNS = ["d", "o", "n", "p_hat", "ci_low", "ci_high"]


def cmd_scan(args):
    eps = _eps_from(args)
    r = bounds.RegimeParams(args.s, eps)
    lo, hi = bounds.ac_lower(r), bounds.ac_upper_closed(r)
    table, trace = Table(list(SCAN_COLUMNS)), Table(list(TRACE_COLUMNS))
    for d in args.dims:
        res = montecarlo.scan_min_overcompleteness(
            d, args.s, eps, args.target, args.coder, args.dict, args.trials, args.o_step,
            args.seed, args.o_cap, args.threads,
        )
        table.rows.append({
            "d": d, "k": round(args.s * d), "o_min": res.o_min, "trace_ref": f"d={d}",
            "ac_lower": lo.value if lo.valid else None, "ac_upper_closed": hi.value,
        })
        for p in res.trace:
            trace.rows.append({"d": d, "o": p.o, "n": p.n, "p_hat": p.p_hat,
                               "ci_low": p.ci_low, "ci_high": p.ci_high})
    return table, trace


def _trace_path(args):
    if args.trace_out:
        return args.trace_out
    if args.out and args.out != "-":
        p = Path(args.out)
        return str(p.with_name(p.stem + ".trace" + p.suffix))
    return None


# ---------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_eps(p):
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--snr-db", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="univsparse", description="Overcompleteness bounds and sparse-coding experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="table of all bounds at one regime or along a sweep")
    _add_common(p)
    _add_eps(p)
    p.add_argument("--s", type=float)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--d", type=int, default=None, help="dimension for finite-d probability bounds")
    p.add_argument("--o", type=float, default=None, help="overcompleteness for finite-d bounds")
    p.add_argument("--variant", choices=("derivation", "short"), default="derivation")
    p.add_argument("--sweep", choices=("s", "snr"), default=None,
                   help="sweep 1/s (with --eps/--snr-db) or SNR in dB (with --s)")
    p.add_argument("--from", dest="range_from", type=float)
    p.add_argument("--to", dest="range_to", type=float)
    p.add_argument("--points", type=int, default=9)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("surface", help="log10 bound surfaces over an (s, eps) grid")
    _add_common(p)
    p.add_argument("--s-from", type=float, default=0.05)
    p.add_argument("--s-to", type=float, default=0.5)
    p.add_argument("--s-points", type=int, default=50)
    p.add_argument("--eps-from", type=float, default=0.05)
    p.add_argument("--eps-to", type=float, default=0.9)
    p.add_argument("--eps-points", type=int, default=50)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("simulate", help="success probability vs overcompleteness")
    _add_common(p)
    _add_eps(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--s", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--o", type=float, nargs="+")
    p.add_argument("--n", type=int, nargs="+", help="dictionary sizes instead of --o")
    p.add_argument("--o-from", type=float)
    p.add_argument("--o-to", type=float)
    p.add_argument("--o-step", type=float)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--pairs", default=None,
                   help="comma-separated dict:coder pairs, e.g. dense:omp,block:block_exact")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--fresh-dict", action="store_true", help="new dictionary for every trial")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="minimal overcompleteness reaching a target success rate")
    _add_common(p)
    _add_eps(p)
    p.add_argument("--dims", type=int, nargs="+", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--target", type=float, default=0.99)
    p.add_argument("--coder", default="omp")
    p.add_argument("--dict", default="dense")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--o-step", type=float, default=0.5)
    p.add_argument("--o-cap", type=float, default=200.0)
    p.add_argument("--trace-out", default=None)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("selftest", help="run the built-in property checks")
    _add_common(p)
    p.add_argument("--property", default=None, choices=sorted(selftest.SUITES))
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--k", type=int, default=2)
    return parser


def _run_selftest(args) -> int:
    names = [args.property] if args.property else sorted(selftest.SUITES)
    failed = []
    for name in names:
        result = selftest.SUITES[name](args)
        for line in result.details:
            print(f"  {line}")
        print(f"{'PASS' if result.ok else 'FAIL'} {name}")
        if not result.ok:
            failed.append(name)
    if failed:
        print("failing properties: " + ", ".join(failed))
        return EXIT_SELFTEST
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        if args.command == "selftest":
            return _run_selftest(args)
        meta = _meta(args, args.command)
        if args.command == "scan":
            table, trace = cmd_scan(args)
            write_output(render(table, args.format, meta), args.out)
            path = _trace_path(args)
            if path:
                write_output(render(trace, args.format, meta), path)
            return EXIT_OK
        write_output(render(args.func(args), args.format, meta), args.out)
        return EXIT_OK
    except (UsageError, DomainError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScanLimitError, ConvergenceError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
