"""Command-line entry point: ``waring <subcommand> [flags]``.

Exit status is 0 on success, 1 for invalid input and 2 when a computation
fails (capacity refusal, non-convergence).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import arcs, asymptotic, core, expsums, singular
from .errors import WaringError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _fmt(value):
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, complex):
        return f"{value.real:.17g}{value.imag:+.17g}j"
    return str(value)


def _jsonable(value):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, int):
        return str(value) if abs(value) >= 2**53 else value
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


class Report:
    """Rows of key/value pairs, rendered as csv, json or aligned text."""

    def __init__(self, rows: list[dict], summary: Optional[dict] = None, json_text: Optional[str] = None):
        self.rows = rows
        self.summary = summary or {}
        self.json_text = json_text

    def render(self, fmt: str) -> str:
        if fmt == "json":
            if self.json_text is not None:
                return self.json_text + "\n"
            payload = self.rows[0] if len(self.rows) == 1 and not self.summary else self.rows
            if self.summary:
                payload = {"rows": self.rows, "summary": self.summary}
            return json.dumps(_jsonable(payload), indent=1) + "\n"
        if fmt == "csv":
            if not self.rows:
                return ""
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})
            return buf.getvalue()
        if len(self.rows) == 1 and len(self.rows[0]) == 1 and not self.summary:
            return f"{_fmt(next(iter(self.rows[0].values())))}\n"
        lines = []
        for i, row in enumerate(self.rows):
            if i:
                lines.append("")
            width = max((len(k) for k in row), default=0)
            lines.extend(f"{k.ljust(width)}  {_fmt(v)}" for k, v in row.items())
        if self.summary:
            lines.append("")
            width = max(len(k) for k in self.summary)
            lines.extend(f"{k.ljust(width)}  {_fmt(v)}" for k, v in self.summary.items())
        return "\n".join(lines) + "\n"


def _coeffs(args) -> Optional[tuple]:
    raw = getattr(args, "coeffs", None)
    if not raw:
        return None
    try:
        return tuple(int(c) for c in raw.split(","))
    except ValueError:
        raise UsageError(f"--coeffs must be a comma-separated list of integers, got {raw!r}") from None


def _real(text: str) -> Fraction | float:
    try:
        return Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a real number or fraction: {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def _instance(args) -> core.WaringInstance:
    try:
        return core.WaringInstance(args.k, args.d, args.N, _coeffs(args))
    except ValueError as exc:
        raise UsageError(f"invalid instance (-k/-d/-N/--coeffs): {exc}") from None


# -------------------------------------------------------------------------- handlers

def cmd_count(args) -> Report:
    inst = _instance(args)
    table = core.count_exact(inst)
    row = {"k": inst.k, "d": inst.d, "N": inst.N, "count": table.count}
    if args.bruteforce:
        row["bruteforce"] = core.count_bruteforce(inst)
    if args.format == "pretty" and not args.bruteforce:
        return Report([{"count": table.count}])
    return Report([row], json_text=None if args.bruteforce else table.to_json())


def cmd_ball(args) -> Report:
    b = core.ball_count(args.k, args.d, args.N)
    return Report([{"k": b.k, "d": b.d, "N": b.N, "latticeCount": b.latticeCount,
                    "volume": b.volume, "ratio": b.ratio}])


def _complex_row(z: complex) -> dict:
    return {"re": z.real, "im": z.imag, "abs": abs(z)}


def cmd_weyl(args) -> Report:
    z = expsums.weyl_sum(args.k, args.X, args.xi)
    return Report([{"k": args.k, "X": args.X, "xi": str(args.xi), **_complex_row(z)}])


def cmd_gauss(args) -> Report:
    try:
        z = expsums.gauss_sum(args.k, args.a, args.q)
    except ValueError as exc:
        raise UsageError(f"-a/-q: {exc}") from None
    return Report([{"k": args.k, "a": args.a, "q": args.q, **_complex_row(z)}])


def cmd_vint(args) -> Report:
    z = expsums.v_integral(args.k, args.X, float(args.theta), args.tol)
    return Report([{"k": args.k, "X": args.X, "theta": float(args.theta), **_complex_row(z)}])


def cmd_hua(args) -> Report:
    try:
        value = expsums.hua_moment(args.k, args.X, args.M)
    except ValueError as exc:
        raise UsageError(f"--M: {exc}") from None
    return Report([{"k": args.k, "X": args.X, "moment": value,
                    "threshold": expsums.hua_threshold(args.k, args.X)}])


def _bound_grid(args) -> list[tuple]:
    k = args.k
    if args.bound == "gauss_decay":
        return [(k, a, q) for q in range(1, args.q_max + 1) for a in range(1, q + 1)
                if math.gcd(a, q) == 1]
    if args.bound == "weyl_minor":
        decomposition = arcs.build_arcs(k, args.X, args.alpha)
        return [(k, args.X, args.alpha, xi)
                for xi in arcs.minor_arc_samples(decomposition, args.samples)]
    if args.bound == "v_decay":
        step = args.theta_max / max(args.samples - 1, 1)
        return [(k, args.X, i * step) for i in range(args.samples)]
    return [(k, X) for X in args.X_list]


def cmd_bounds(args) -> Report:
    report = expsums.measure_bound(args.bound, _bound_grid(args))
    if args.format == "csv":
        return Report([report.csv_row()])
    return Report([{
        "boundName": report.boundName, "gridSize": len(report.parameterGrid),
        "worstRatio": report.worstRatio, "worstWitness": " ".join(_fmt(v) for v in report.worstWitness),
        "fittedExponent": report.fittedExponent,
    }])


def cmd_arcs(args) -> Report:
    try:
        dec = arcs.build_arcs(args.k, args.X, args.alpha)
    except ValueError as exc:
        raise UsageError(f"-X/--alpha: {exc}") from None
    rows = [{"center": str(a.center), "lo": a.lo.value, "hi": a.hi.value} for a in dec.arcs]
    summary = {"Q": dec.Q, "halfWidth": dec.halfWidth, "totalMajorMeasure": dec.totalMajorMeasure}
    return Report(rows, summary, json_text=dec.to_json())


def cmd_circle(args) -> Report:
    X = args.X if args.X is not None else core.iroot(args.N, args.k)
    ladder = arcs.fourier_ladder(args.k, args.d, X)
    row = {"k": args.k, "d": args.d, "X": X, "N": args.N,
           "integral": arcs.circle_integral(ladder, args.N)}
    sampled = arcs.circle_integral_sampled(ladder, args.N)
    row["sampledMean"] = sampled.real
    if X >= 2:
        dec = arcs.build_arcs(args.k, X, args.alpha)
        row["Mk"] = arcs.major_arc_integral(ladder, args.N, dec).real
        row["mk"] = arcs.minor_arc_integral(ladder, args.N, dec).real
    return Report([row])


def cmd_singular(args) -> Report:
    coeffs = _coeffs(args)
    res = singular.euler_product(args.k, args.d, args.N, args.P, args.tol, coeffs, args.Q)
    summary = None
    if args.pairs:
        rng = random.Random(args.seed)
        pairs = []
        while len(pairs) < args.pairs:
            q1, q2 = rng.randint(1, 100), rng.randint(1, 100)
            if math.gcd(q1, q2) == 1:
                pairs.append((q1, q2))
        mult = singular.multiplicativity_check(args.k, args.d, args.N, pairs, coeffs)
        summary = {"multiplicativityPairs": len(pairs), "multiplicativityMaxError": mult.max_error}
    if args.format == "json":
        payload = res.to_dict()
        if summary:
            payload.update(summary)
        return Report([], json_text=json.dumps(payload, indent=1))
    return Report([res.csv_row() if args.format == "csv" else res.to_dict()], summary)


def cmd_mainterm(args) -> Report:
    coeffs = _coeffs(args)
    mt = asymptotic.main_term(args.k, args.d, args.N, coeffs)
    return Report([{"k": mt.k, "d": mt.d, "N": mt.N, "logValue": mt.logValue, "value": mt.value,
                    "overflow": mt.overflow}])


def cmd_cascade(args) -> Report:
    rec = asymptotic.verify(_instance(args), args.alpha, args.P, args.Q, args.tol)
    d1, d2, d3 = rec.cascadeDeltas
    return Report([{"k": args.k, "d": args.d, "N": args.N, "alpha": args.alpha,
                    "Mk": rec.Mk, "A1": rec.A1, "A2": rec.A2, "A3": rec.A3,
                    "mainTerm": rec.mainTerm, "delta1": d1, "delta2": d2, "delta3": d3}])


def cmd_verify(args) -> Report:
    rec = asymptotic.verify(_instance(args), args.alpha, args.P, args.Q, args.tol)
    return Report([rec.row()])


def cmd_scan(args) -> Report:
    if args.N_grid:
        grid = args.N_grid
    else:
        if args.N_from is None or args.N_to is None:
            raise UsageError("scan needs --N-grid or both --N-from and --N-to")
        if args.step < 1:
            raise UsageError(f"--step must be >= 1, got {args.step}")
        grid = list(range(args.N_from, args.N_to + 1, args.step))
    if grid != sorted(grid):
        raise UsageError("--N-grid must be ascending")
    result = asymptotic.scan(args.k, args.d, grid, args.alpha, args.P, args.Q, args.tol)
    summary = {}
    if len(result) >= 2:
        lo, hi = result.half_medians(lambda r: abs(r.ratio - 1))
        summary = {"lowerHalfMedianAbsRatioMinus1": lo, "upperHalfMedianAbsRatioMinus1": hi}
    for N, message in result.errors:
        summary[f"error_N{N}"] = message
    rows = [r.row() for r in result]
    if args.plot:
        render_scan_plot(result, args.plot)
    if args.format == "csv":
        for key, value in summary.items():
            sys.stderr.write(f"# {key} = {_fmt(value)}\n")
        return Report(rows)
    return Report(rows, summary)


def render_scan_plot(result, path: str) -> None:
    """Ratio and normalized cascade deltas against N, one PNG."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise UsageError("--plot needs matplotlib (pip install 'artifact[plot]')") from None
    records = list(result)
    Ns = [r.instance.N for r in records]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(Ns, [r.ratio for r in records], "o-")
    ax1.axhline(1.0, color="gray", lw=0.8)
    ax1.set_xlabel("N")
    ax1.set_ylabel("r_k(N) / (S(N) * main term)")
    for i, label in enumerate(("|Mk-A1|", "|A1-A2|", "|A2-A3|")):
        ax2.semilogy(Ns, [max(r.cascadeDeltas[i], 1e-300) for r in records], "o-", label=label)
    ax2.set_xlabel("N")
    ax2.set_ylabel("delta / main term")
    ax2.legend()
    if records:
        inst = records[0].instance
        fig.suptitle(f"k={inst.k}, d={inst.d}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# -------------------------------------------------------------------------- parser

def _add_instance(p, N=True, d=True):
    p.add_argument("-k", type=int, required=True, help="power k >= 2")
    if d:
        p.add_argument("-d", type=int, required=True, help="number of summands")
    if N:
        p.add_argument("-N", type=int, required=True, help="target integer")


def _add_knobs(p):
    p.add_argument("--alpha", type=float, default=0.25, help="major-arc exponent (default: %(default)s)")
    p.add_argument("--Q", type=int, default=1000, help="singular series truncation (default: %(default)s)")
    p.add_argument("--P", type=int, default=50, help="Euler product prime bound (default: %(default)s)")
    p.add_argument("--tol", type=float, default=1e-9, help="local density tolerance (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "pretty"), default="pretty",
                        help="output format (default: %(default)s)")
    common.add_argument("--output", default=None, help="write to this file instead of stdout (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps (default: %(default)s)")

    parser = _Parser(prog="waring", description="Circle-method computations for Waring's problem.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(handler=handler)
        return p

    p = add("count", cmd_count, "exact number of representations N = sum c_i n_i^k")
    _add_instance(p)
    p.add_argument("--coeffs", default=None, help="comma-separated positive weights c_i")
    p.add_argument("--bruteforce", action="store_true", help="also enumerate tuples directly")

    p = add("ball", cmd_ball, "integer points in the k-ball of radius N^(1/k)")
    _add_instance(p)

    p = add("weyl", cmd_weyl, "Weyl sum f_X(xi)")
    _add_instance(p, N=False, d=False)
    p.add_argument("-X", type=int, required=True)
    p.add_argument("--xi", type=_real, required=True, help="real number or fraction such as 1/3")

    p = add("gauss", cmd_gauss, "normalized Gauss sum G(a/q)")
    _add_instance(p, N=False, d=False)
    p.add_argument("-a", type=int, required=True)
    p.add_argument("-q", type=int, required=True)

    p = add("vint", cmd_vint, "oscillatory integral v(theta) = int_0^X e(theta z^k) dz")
    _add_instance(p, N=False, d=False)
    p.add_argument("-X", type=int, required=True)
    p.add_argument("--theta", type=_real, required=True)
    p.add_argument("--tol", type=float, default=1e-10)

    p = add("hua", cmd_hua, "exact k(k+1)-th moment of |f_X|")
    _add_instance(p, N=False, d=False)
    p.add_argument("-X", type=int, required=True)
    p.add_argument("--M", type=int, default=None, help="sample count (default: threshold + 1)")

    p = add("bounds", cmd_bounds, "measure an exponential-sum bound over a grid")
    _add_instance(p, N=False, d=False)
    p.add_argument("--bound", choices=expsums.BOUND_NAMES, required=True)
    p.add_argument("-X", type=int, default=64)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--q-max", type=int, default=50)
    p.add_argument("--theta-max", type=float, default=1.0)
    p.add_argument("--X-list", type=_int_list, default=[16, 32, 64, 128])

    p = add("arcs", cmd_arcs, "major arc decomposition for (k, X, alpha)")
    _add_instance(p, N=False, d=False)
    p.add_argument("-X", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.25)

    p = add("circle", cmd_circle, "exact circle integral and its arc split")
    _add_instance(p)
    p.add_argument("-X", type=int, default=None, help="Weyl sum length (default: floor(N^(1/k)))")
    p.add_argument("--alpha", type=float, default=0.25)

    p = add("singular", cmd_singular, "singular series: truncated sum and Euler product")
    _add_instance(p)
    _add_knobs(p)
    p.add_argument("--coeffs", default=None)
    p.add_argument("--pairs", type=int, default=0, help="random coprime pairs for a multiplicativity check")

    p = add("mainterm", cmd_mainterm, "Gamma main term")
    _add_instance(p)
    p.add_argument("--coeffs", default=None)

    for name, handler, text in (("cascade", cmd_cascade, "M_k against A1, A2, A3"),
                                ("verify", cmd_verify, "full verification record for one N")):
        p = add(name, handler, text)
        _add_instance(p)
        _add_knobs(p)
        p.add_argument("--coeffs", default=None)

    p = add("scan", cmd_scan, "verification records over a grid of N")
    _add_instance(p, N=False)
    _add_knobs(p)
    p.add_argument("--N-from", type=int, default=None)
    p.add_argument("--N-to", type=int, default=None)
    p.add_argument("--step", type=int, default=500)
    p.add_argument("--N-grid", type=_int_list, default=None, help="explicit comma-separated grid")
    p.add_argument("--plot", default=None, help="also render ratio and cascade deltas to this PNG (needs matplotlib)")

    for action in parser._subparsers._group_actions[0].choices.values():
        for arg in action._actions:
            if arg.help is None:
                arg.help = arg.dest.replace("_", " ")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.handler(args).render(args.format)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"waring {args.command}: error: {exc}\n")
        return 1
    except (WaringError, OverflowError, ArithmeticError) as exc:
        sys.stderr.write(f"waring {args.command}: computation failed: {exc}\n")
        return 2
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
