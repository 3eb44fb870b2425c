"""Command-line front end.

All thresholds are given in dB and converted to linear scale once, when the
moments are generated. Data go to the output file (or stdout); diagnostics go
to ``#`` header lines and to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from decimal import Decimal
from pathlib import Path

from scipy import stats

from . import analysis
from .errors import ConvergenceError, MomentFileError, PrecisionError
from .moments import (
    BetaParams,
    SirParams,
    beta_moments,
    format_moments,
    load_moments,
    point_mass_moments,
    sir_poisson_moments,
    uniform_moments,
)
from .precision import check_complete_monotonicity, rule_of_thumb_digits
from .transform import (
    apply,
    build_matrix,
    cdf_samples,
    distinct_entry_count,
    max_abs_entry,
    pdf_samples,
    write_matrix_csv,
)

log = logging.getLogger("metadist")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PRECISION = 3
EXIT_CM_VIOLATION = 4
EXIT_IO = 5
EXIT_INVALID = 6


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fmt(v, full):
    if v is None:
        return ""
    if isinstance(v, Decimal):
        return str(v) if full else repr(float(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_table(out, columns, rows, meta, fmt, full, no_meta):
    if fmt == "json":
        doc = {"columns": columns, "rows": [[_json_value(v, full) for v in r] for r in rows]}
        if not no_meta:
            doc = {"meta": meta, **doc}
        out.write(json.dumps(doc, indent=1))
        out.write("\n")
        return
    if not no_meta:
        for key, val in meta.items():
            out.write(f"# {key}={val}\n")
    out.write(",".join(columns) + "\n")
    for r in rows:
        out.write(",".join(_fmt(v, full) for v in r) + "\n")


def _json_value(v, full):
    if isinstance(v, Decimal):
        return str(v) if full else float(v)
    return v


def _open_output(path):
    if path in (None, "-"):
        return _Stdout()
    try:
        return open(path, "w", newline="")
    except OSError as e:
        raise CliError(f"cannot write {path}: {e}", EXIT_IO) from None


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()
        return False


def _add_source_flags(p, with_moments_file=True):
    g = p.add_mutually_exclusive_group(required=True)
    if with_moments_file:
        g.add_argument("--moments", metavar="FILE", help="moment CSV (j,M_j)")
    g.add_argument("--uniform", action="store_true", help="uniform distribution on [0,1]")
    g.add_argument("--beta", nargs=2, metavar=("ALPHA", "BETA"), help="beta distribution")
    g.add_argument("--point-mass", metavar="NU", help="point mass at NU")
    g.add_argument("--sir", metavar="THETA_DB", type=float, help="Poisson cellular SIR model at threshold THETA_DB")
    p.add_argument("--delta", default="0.5", help="path-loss parameter 2/alpha for --sir (default 0.5)")


def _moments_from_args(args, n, digits):
    if getattr(args, "moments", None):
        try:
            m = load_moments(args.moments)
        except OSError as e:
            raise CliError(f"cannot read {args.moments}: {e}", EXIT_IO) from None
        except MomentFileError as e:
            raise CliError(f"{args.moments}: {e}", EXIT_INVALID) from None
        if m.n < n:
            raise CliError(f"{args.moments} holds {len(m)} moments; order {n} needs {n + 1}", EXIT_INVALID)
        return m.truncated(n), "file:" + str(args.moments)
    if args.uniform:
        return uniform_moments(n, digits), "uniform"
    if args.beta:
        a, b = args.beta
        return beta_moments(BetaParams(a, b), n, digits), f"beta({a},{b})"
    if args.point_mass is not None:
        return point_mass_moments(args.point_mass, n, digits), f"point-mass({args.point_mass})"
    params = SirParams.from_db(args.sir, args.delta, digits)
    return sir_poisson_moments(params, n, max(digits, 16)), f"sir(theta_dB={args.sir},delta={args.delta})"


def cmd_matrix(args):
    t0 = time.perf_counter()
    a = build_matrix(args.n)
    bad = [(i, j) for i in range(a.size) for j in range(a.size) if a.entry(i, j) != a.entry(a.n - j, a.n - i)]
    if bad:
        raise CliError(f"antidiagonal symmetry check failed at {bad[0]}", EXIT_INVALID)
    print(f"# order {a.n}: max|A| = {max_abs_entry(a)}, distinct entries = {distinct_entry_count(a.n)}",
          file=sys.stderr)
    log.info("built in %.3fs", time.perf_counter() - t0)
    with _open_output(args.output) as out:
        write_matrix_csv(a, out)
    return EXIT_OK


def cmd_moments(args):
    digits = args.digits or rule_of_thumb_digits(args.n)
    m, _ = _moments_from_args(args, args.n, digits)
    with _open_output(args.output) as out:
        out.write(format_moments(m))
    return EXIT_OK


def cmd_reconstruct(args):
    n = args.n
    digits = args.digits or rule_of_thumb_digits(n)
    m, source = _moments_from_args(args, n, digits)
    k_max = min(args.k_max, n)
    if k_max >= 1:
        violations = check_complete_monotonicity(m, k_max)
        if violations:
            for k, j, v in violations[:20]:
                print(f"complete monotonicity violated: k={k} n={j} value={v:.6E}", file=sys.stderr)
            raise CliError(f"{len(violations)} complete-monotonicity violation(s); "
                           "not a moment sequence of a distribution on [0,1]", EXIT_CM_VIOLATION)
    t0 = time.perf_counter()
    try:
        w = apply(build_matrix(n), m, digits)
    except PrecisionError as e:
        raise CliError(f"{e} (suggested --digits {e.suggested_digits})", EXIT_PRECISION) from None
    log.info("transform applied in %.3fs", time.perf_counter() - t0)
    cdf = cdf_samples(w)
    grid = cdf.grid
    meta = {
        "n": n,
        "digits": digits,
        "source": source,
        "multiplications": w.multiplications,
        "negative_weights": len(w.negatives),
        "most_negative": min((v for _, v in w.negatives), default="none"),
        "below_budget": w.below_budget,
    }
    if args.pdf:
        pdf = pdf_samples(w).values
        columns = ["x", "F", "f"]
        rows = [(grid[k], cdf.values[k], pdf[k] if k <= n else None) for k in range(n + 2)]
    else:
        columns = ["x", "F"]
        rows = list(zip(grid, cdf.values))
    with _open_output(args.output) as out:
        _write_table(out, columns, rows, meta, args.format, args.full_precision, args.no_meta)
    return EXIT_OK


def cmd_percentiles(args):
    n = args.n
    digits = args.digits or rule_of_thumb_digits(n)
    thetas = args.theta_db or analysis.theta_grid_db(args.theta_min, args.theta_max, args.theta_step)
    t0 = time.perf_counter()
    try:
        curves = analysis.percentile_curves(args.p, thetas, args.delta, n, digits, workers=args.workers)
    except PrecisionError as e:
        raise CliError(f"{e} (suggested --digits {e.suggested_digits})", EXIT_PRECISION) from None
    log.info("%d percentiles x %d thresholds at n=%d in %.2fs", len(args.p), len(thetas), n, time.perf_counter() - t0)

    outdir = Path(args.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create {outdir}: {e}", EXIT_IO) from None
    ext = "json" if args.format == "json" else "csv"
    for label, curve in zip(args.p_labels, curves):
        rows = [
            (pt.theta_db, math.log2(1 + pt.theta), pt.reliability, int(pt.saturated))
            for pt in curve.points
        ]
        meta = {"p": label, "n": n, "digits": digits, "delta": args.delta,
                "saturated_points": sum(r[3] for r in rows)}
        with _open_output(outdir / f"percentile_{label}.{ext}") as out:
            _write_table(out, ["theta_dB", "spectral_efficiency", "reliability", "saturated"],
                         rows, meta, args.format, False, args.no_meta)
    if args.gap and len(curves) >= 2:
        try:
            (xl, gl), (xh, gh) = analysis.edge_gaps(curves[0], curves[-1])
        except ValueError as e:
            log.warning("gap summary skipped: %s", e)
        else:
            rows = [("low_theta", xl, gl), ("high_theta", xh, gh)]
            meta = {"p_a": args.p_labels[0], "p_b": args.p_labels[-1], "n": n}
            with _open_output(outdir / f"gap.{ext}") as out:
                _write_table(out, ["edge", "reliability", "gap_dB"], rows, meta, args.format, False, args.no_meta)
            log.info("gap p=%s vs p=%s: %.2f dB (low theta), %.2f dB (high theta)",
                     args.p_labels[0], args.p_labels[-1], gl, gh)
    return EXIT_OK


def cmd_convergence(args):
    if args.uniform:
        oracle, source = (lambda x: x), (lambda n, d: uniform_moments(n, d))
        const = 1.0  # |f| = 1, f' = 0
    else:
        a, b = args.beta
        params = BetaParams(a, b)
        dist = stats.beta(float(a), float(b))
        oracle, source = dist.cdf, (lambda n, d: beta_moments(params, n, d))
        const = analysis.beta_error_constant(params)
    try:
        rep = analysis.convergence_study(source, oracle, args.orders, args.digits,
                                         const if math.isfinite(const) else None)
    except PrecisionError as e:
        raise CliError(f"{e} (suggested --digits {e.suggested_digits})", EXIT_PRECISION) from None
    log.info("fitted rate %.4f", rep.fitted_rate)
    meta = {"bound_constant": rep.bound_constant, "fitted_rate": repr(rep.fitted_rate)}
    rows = list(zip(rep.orders, rep.max_errors, rep.bounds()))
    with _open_output(args.output) as out:
        _write_table(out, ["n", "max_error", "bound"], rows, meta, args.format, False, args.no_meta)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metadist", description=__doc__.splitlines()[0])
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", help="diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        if output:
            p.add_argument("-o", "--output", help="output file (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--no-meta", action="store_true", help="omit metadata header lines")

    p = sub.add_parser("matrix", parents=[verbose], help="write the transform matrix as integer CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("moments", parents=[verbose], help="write a moment CSV file")
    _add_source_flags(p, with_moments_file=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--digits", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("reconstruct", parents=[verbose], help="cdf (and pdf) samples from moments")
    _add_source_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--digits", type=int, help="working precision (default n/2 + 16)")
    p.add_argument("--pdf", action="store_true", help="add the pdf column f")
    p.add_argument("--k-max", type=int, default=10, help="depth of the complete-monotonicity check")
    p.add_argument("--full-precision", action="store_true", help="print every working digit")
    common(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("percentiles", parents=[verbose], help="user-percentile curves for the Poisson SIR model")
    p.add_argument("--p", type=str, required=True, help="comma-separated percentiles, e.g. 0.05,0.1")
    p.add_argument("--theta-min", type=float, default=-20.0)
    p.add_argument("--theta-max", type=float, default=20.0)
    p.add_argument("--theta-step", type=float, default=1.0)
    p.add_argument("--theta-db", type=_float_list, help="explicit comma-separated dB values")
    p.add_argument("--delta", default="0.5")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--digits", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--gap", action="store_true", help="write the dB gap between first and last percentile")
    p.add_argument("--output-dir", required=True)
    common(p, output=False)
    p.set_defaults(func=cmd_percentiles)

    p = sub.add_parser("convergence", parents=[verbose], help="max reconstruction error against a closed-form cdf")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--beta", nargs=2, metavar=("ALPHA", "BETA"))
    g.add_argument("--uniform", action="store_true")
    p.add_argument("--orders", type=_int_list, default=[20, 50, 100, 200])
    p.add_argument("--digits", type=int)
    common(p)
    p.set_defaults(func=cmd_convergence)
    return parser


def _check_args(parser, args):
    if getattr(args, "n", 0) is not None and getattr(args, "n", 0) < 0:
        parser.error("--n must be nonnegative")
    if args.command == "percentiles":
        labels = [s.strip() for s in args.p.split(",") if s.strip()]
        try:
            args.p = [float(s) for s in labels]
        except ValueError:
            parser.error(f"--p expects comma-separated numbers, got {args.p!r}")
        args.p_labels = labels
        if any(not 0 < p < 1 for p in args.p):
            parser.error("percentiles must lie in (0, 1)")
        if not args.theta_db:
            if not args.theta_max > args.theta_min:
                parser.error("--theta-max must exceed --theta-min")
            if args.theta_step <= 0:
                parser.error("--theta-step must be positive")
        if args.n < 2:
            parser.error("--n must be at least 2")
    if args.command == "convergence" and len(args.orders) < 3:
        parser.error("--orders needs at least 3 values")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_args(parser, args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as e:
        print(f"metadist: error: {e}", file=sys.stderr)
        return e.code
    except ConvergenceError as e:
        print(f"metadist: error: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except (ValueError, ArithmeticError, MemoryError) as e:
        print(f"metadist: error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
