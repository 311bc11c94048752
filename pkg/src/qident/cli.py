"""Command-line front end.

Machine-readable results go to stdout as JSON lines (one object per
identity or expansion); a short human transcript goes to stderr.  Runs
are deterministic: two invocations with the same arguments produce
byte-identical stdout, except for the "elapsed" timing fields, which
`--no-timing` drops.

Exit status: 0 when everything passed, 1 when some identity failed its
coefficient check, 2 for parse, lowering, or evaluation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .catalog import (
    ParamOutOfRange,
    UnknownKey,
    default_instances,
    get_identity,
    list_identities,
    verify_identity,
)
from .ctengine import ProofReplayError, prove_main_theorem
from .qfactorial import NotTruncatable, ZeroDivisor, expand_product_spec
from .qring import QSeriesError, Series
from .report import VerificationReport, compare_series
from .speclang import (
    LoweringError,
    ParseError,
    lower_expression,
    parse_expression,
    parse_file,
    validate_identity,
)
from .summation import (
    DomainError,
    EnumerationCapped,
    NegativeValuationResidual,
    SumSpec,
    enumerate_support,
    eval_sum_over,
    eval_sum_scaled,
)

_RUNTIME_ERRORS = (QSeriesError, NotTruncatable, ZeroDivisor, DomainError,
                   EnumerationCapped, NegativeValuationResidual)
_EXIT = {"pass": 0, "mismatch": 1, "error": 2}


def _err(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _poly_text(coeffs: list[int]) -> str:
    pieces = []
    for e, c in enumerate(coeffs):
        if not c:
            continue
        mono = "1" if e == 0 else ("q" if e == 1 else f"q^{e}")
        mag = abs(c)
        body = mono if mag == 1 and e > 0 else (
            str(mag) if e == 0 else f"{mag}*{mono}")
        pieces.append((("+ " if c > 0 else "- ") if pieces
                       else ("" if c > 0 else "-")) + body)
    return " ".join(pieces) if pieces else "0"


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record) + "\n")


def _log(line: str) -> None:
    print(line, file=sys.stderr)


def _human(report: VerificationReport, timing: bool = True) -> str:
    mark = {"pass": "pass", "mismatch": "FAIL", "error": "error"}
    took = f", {report.elapsed:.3f}s" if timing else ""
    line = (f"[{mark[report.status]:>5}] {report.name} "
            f"(order {report.order}{took})")
    if report.first_mismatch is not None:
        e = report.first_mismatch["exponents"]
        mono = "*".join(f"{v}^{k}" for v, k in e.items())
        line += (f"  first difference at {mono}: "
                 f"{report.first_mismatch['lhs']} != "
                 f"{report.first_mismatch['rhs']}")
    elif report.error:
        line += f"  {report.error}"
    elif "qcoeffs" in report.details:
        tail = " + ..." if report.order > len(report.details["qcoeffs"]) - 1 \
            else ""
        line += f"  both sides = {_poly_text(report.details['qcoeffs'])}{tail}"
    return line


def _parse_params(text: str) -> dict:
    out: dict[str, int] = {}
    for piece in filter(None, (p.strip() for p in text.split(","))):
        name, eq, value = piece.partition("=")
        try:
            if not eq or not name.strip():
                raise ValueError
            out[name.strip()] = int(value)
        except ValueError:
            raise ValueError(
                f"bad parameter {piece!r}; expected NAME=INTEGER") from None
    return out


def _parse_zwindow(text: str | None):
    if text is None:
        return None
    if "," in text:
        lo, hi = text.split(",", 1)
        return (int(lo), int(hi))
    return int(text)


# ------------------------------------------------------------------- verify


def _eval_side(spec, order: int, d: int, shell_cap):
    """Expand one lowered side in base q^(1/d) to q-order `order * d`."""
    if isinstance(spec, SumSpec):
        sup = enumerate_support(spec, order, shell_cap)
        meta = {"points": len(sup.points), "shells": sup.shells_scanned}
        if d == 1:
            return eval_sum_over(spec, sup.points, order), meta
        series, got = eval_sum_scaled(spec, order, shell_cap)
        return (series.rescale_base(d // got) if d > got else series), meta
    series = expand_product_spec(spec, order)
    return (series.rescale_base(d) if d > 1 else series), None


def _verify_lowered(lowered, order: int, shell_cap, source: str):
    details = {"source": source}
    if lowered.rescale > 1:
        details["qpow_denominator"] = lowered.rescale
    start = time.perf_counter()
    try:
        lhs, sup_l = _eval_side(lowered.lhs, order, lowered.rescale, shell_cap)
        rhs, sup_r = _eval_side(lowered.rhs, order, lowered.rescale, shell_cap)
        support = {s: m for s, m in (("lhs", sup_l), ("rhs", sup_r)) if m}
        if support:
            details["support"] = support
        report = compare_series(lowered.name, lhs, rhs,
                                order * lowered.rescale, details=details)
        if report.passed:
            try:
                report.details["qcoeffs"] = lhs.qcoeffs(
                    min(order * lowered.rescale, 12))
            except ValueError:
                pass
    except _RUNTIME_ERRORS as exc:
        report = VerificationReport(lowered.name, order, "error",
                                    error=_err(exc), details=details)
    report.elapsed = time.perf_counter() - start
    return report


def cmd_verify(args) -> int:
    reports: list[VerificationReport] = []
    if args.catalog and args.file:
        _log("choose either --catalog or a file, not both")
        return 2
    if args.catalog:
        if args.catalog == "all":
            if args.param:
                _log("--param only applies to a single catalog key")
                return 2
            targets = default_instances()
        else:
            targets = [(args.catalog, _parse_params(args.param))]
        zwindow = _parse_zwindow(args.zwindow)
        for key, params in targets:
            try:
                ident = get_identity(key, **params)
            except (UnknownKey, ParamOutOfRange) as exc:
                reports.append(VerificationReport(
                    key, args.order, "error", error=_err(exc)))
                continue
            reports.append(verify_identity(ident, args.order, zwindow=zwindow,
                                           shell_cap=args.shell_cap))
    elif args.file:
        text = Path(args.file).read_text()
        try:
            asts = parse_file(text)
        except ParseError as exc:
            reports.append(VerificationReport(
                Path(args.file).name, args.order, "error", error=_err(exc)))
            asts = []
        for ast in asts:
            try:
                lowered = validate_identity(ast)
            except LoweringError as exc:
                reports.append(VerificationReport(
                    ast.name, args.order, "error", error=_err(exc)))
                continue
            reports.append(_verify_lowered(lowered, args.order,
                                           args.shell_cap, args.file))
    else:
        _log("nothing to verify: give --catalog KEY or an identity file")
        return 2

    code = 0
    for report in reports:
        _emit(report.to_record(with_elapsed=not args.no_timing))
        _log(_human(report, timing=not args.no_timing))
        code = max(code, _EXIT[report.status])
    counts = {s: sum(1 for r in reports if r.status == s)
              for s in ("pass", "mismatch", "error")}
    _log(f"{counts['pass']} passed, {counts['mismatch']} failed, "
         f"{counts['error']} errors")
    return code


# ------------------------------------------------------------------- expand


def cmd_expand(args) -> int:
    source = args.expr
    if Path(source).is_file():
        source = Path(source).read_text()
    try:
        spec, d = lower_expression(parse_expression(source))
    except (ParseError, LoweringError) as exc:
        _emit({"status": "error", "error": _err(exc)})
        _log(f"[error] {_err(exc)}")
        return 2
    try:
        if isinstance(spec, SumSpec):
            series, got = eval_sum_scaled(spec, args.order, args.shell_cap)
            if d > got:
                series = series.rescale_base(d // got)
        else:
            series = expand_product_spec(spec, args.order)
    except _RUNTIME_ERRORS as exc:
        _emit({"status": "error", "error": _err(exc)})
        _log(f"[error] {_err(exc)}")
        return 2

    record: dict = {"status": "ok", "order": args.order, "exact": series.exact,
                    "series": series.to_text()}
    if d > 1:
        record["qpow_denominator"] = d
    try:
        record["qcoeffs"] = series.qcoeffs()
        shown = _poly_text(record["qcoeffs"])
    except ValueError:
        shown = record["series"]
    _emit(record)
    _log(f"[   ok] expanded to order {args.order}: {shown}")
    return 0


# --------------------------------------------------------------- prove-main


def cmd_prove_main(args) -> int:
    start = time.perf_counter()
    try:
        proof = prove_main_theorem(args.order, args.grid)
        report = VerificationReport(
            "main-replay", args.order, "pass",
            details={"grid": args.grid, "grid_points": proof.grid_points,
                     "stages": ["exponent bookkeeping on the grid",
                                "constant term vs paired sum",
                                "paired sum vs direct sum"]})
    except ProofReplayError as exc:
        report = VerificationReport("main-replay", args.order, "error",
                                    error=str(exc),
                                    details={"grid": args.grid})
    report.elapsed = time.perf_counter() - start
    _emit(report.to_record(with_elapsed=not args.no_timing))
    _log(_human(report, timing=not args.no_timing))
    return _EXIT[report.status]


# --------------------------------------------------------------------- list


def cmd_list(args) -> int:
    for row in list_identities():
        _emit(row)
        params = ", ".join(
            f"{p['name']} >= {p['min']}"
            + (f" (<= {p['max']})" if p["max"] is not None else "")
            for p in row["params"]) or "-"
        _log(f"{row['key']:18s} [{row['mode']:6s}] params: {params:28s} "
             f"{row['summary']}")
    return 0


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qident",
        description="verify q-series identities coefficient by coefficient")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check identities up to a q-order")
    v.add_argument("file", nargs="?", metavar="FILE",
                   help="identity file; alternative to --catalog")
    v.add_argument("--catalog", metavar="KEY",
                   help="catalog key, or 'all' for every default instance")
    v.add_argument("--param", default="", metavar="NAME=INT[,..]",
                   help="parameters for the catalog key, e.g. k=3,i=2")
    v.add_argument("--order", type=int, default=32,
                   help="truncation order (default 32)")
    v.add_argument("--zwindow", metavar="K|LO,HI",
                   help="z-powers to check for per-coefficient identities")
    v.add_argument("--shell-cap", type=int, dest="shell_cap", default=None,
                   help="abort enumeration beyond this lattice radius")
    v.add_argument("--no-timing", action="store_true",
                   help="omit elapsed times for byte-stable output")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("expand", help="expand one expression as a q-series")
    e.add_argument("expr", metavar="EXPR|FILE",
                   help="expression text such as '1 / poch(q; q; inf)', "
                        "or a file containing one")
    e.add_argument("--order", type=int, default=32)
    e.add_argument("--shell-cap", type=int, dest="shell_cap", default=None)
    e.set_defaults(func=cmd_expand)

    p = sub.add_parser("prove-main",
                       help="replay the constant-term proof of the bilateral "
                            "double-sum identity")
    p.add_argument("--order", type=int, default=24)
    p.add_argument("--grid", type=int, default=10,
                   help="half-width of the exponent bookkeeping grid")
    p.add_argument("--no-timing", action="store_true")
    p.set_defaults(func=cmd_prove_main)

    ls = sub.add_parser("list", help="print the identity catalog")
    ls.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        _log(f"[error] {exc}")
        return 2
    except OSError as exc:
        _log(f"[error] {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
