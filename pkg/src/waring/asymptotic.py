"""Gamma main term, the singular integral, and the major-arc approximation cascade.

For an instance (k, d, N) with X = floor(N^(1/k)):

    M_k   exact major-arc integral of (f_X)^d e(-N xi)
    A1    f_X replaced by G(a/q) v(xi - a/q) on each major arc
    A2    arc integrals of v^d extended to the whole line (closed form)
    A3    truncated singular series replaced by the full one

``verify`` assembles all of these next to the exact count; ``scan`` runs it
over a grid of N.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

from .arcs import build_arcs, fourier_ladder, major_arc_integral, minor_arc_integral
from .core import WaringInstance, count_exact, iroot
from .errors import ConvergenceError, WaringError
from .expsums import v_values
from .singular import euler_product, positivity_guaranteed, truncated_series


@dataclass(frozen=True)
class MainTerm:
    k: int
    d: int
    N: int
    logValue: float
    value: float
    coeffs: Optional[tuple] = None

    @property
    def overflow(self) -> bool:
        return math.isinf(self.value)


def log_main_term(k: int, d: int, N: int, coeffs: Optional[Sequence[int]] = None) -> float:
    out = d * math.lgamma(1.0 + 1.0 / k) - math.lgamma(d / k) + (d / k - 1.0) * math.log(N)
    if coeffs is not None:
        out -= math.fsum(math.log(c) for c in coeffs) / k
    return out


def main_term(k: int, d: int, N: int, coeffs: Optional[Sequence[int]] = None) -> MainTerm:
    """Gamma(1 + 1/k)^d / Gamma(d/k) * N^(d/k - 1) / (c_1...c_d)^(1/k), in log space."""
    if d < 1 or N < 1 or k < 1:
        raise ValueError("need k, d, N >= 1")
    log_value = log_main_term(k, d, N, coeffs)
    value = math.exp(log_value) if log_value < 709.78 else math.inf
    return MainTerm(k, d, N, log_value, value, tuple(coeffs) if coeffs is not None else None)


# --------------------------------------------------------------------------
# integrals of v^d

_GL16 = roots_legendre(16)
_GL24 = roots_legendre(24)
_PANEL = 0.25


def _scaled_panels(k: int, d: int, nu: float, lo: float, hi: float, rule) -> complex:
    """int_lo^hi w(t)^d e(-nu t) dt, w(t) = int_0^1 e(t z^k) dz, on fixed panels."""
    n = max(1, math.ceil((hi - lo) / _PANEL))
    edges = np.linspace(lo, hi, n + 1)
    x, wts = rule
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    total = 0.0 + 0.0j
    for i in range(0, n, 8192):
        t = (mid[i:i + 8192, None] + half[i:i + 8192, None] * x[None, :])
        vals = v_values(k, 1.0, t.ravel()).reshape(t.shape) ** d * np.exp(-2j * np.pi * nu * t)
        part = half[i:i + 8192] * (vals @ wts)
        total += complex(math.fsum(part.real), math.fsum(part.imag))
    return total


def _window_integral(k: int, d: int, nu: float, lo: float, hi: float, tol: float) -> complex:
    fine = _scaled_panels(k, d, nu, lo, hi, _GL24)
    coarse = _scaled_panels(k, d, nu, lo, hi, _GL16)
    if abs(fine - coarse) > tol:
        raise ConvergenceError(f"panel quadrature on [{lo}, {hi}] missed tol={tol:g}")
    return fine


@dataclass(frozen=True)
class SingularIntegral:
    value: complex
    closed_form: float
    window: float
    tail_estimate: float

    @property
    def deviation(self) -> float:
        return abs(self.value.real - self.closed_form) / self.closed_form


def singular_integral(k: int, d: int, N: int, tol: float = 1e-5,
                      max_window: float = 2.0**22) -> SingularIntegral:
    """int_R v(xi)^d e(-xi N) d xi over a growing window |xi| <= T / X^k.

    In t = xi X^k the integral is X^(d-k) int w(t)^d e(-t N/X^k) dt.  The
    window doubles until the newest shell, scaled by the geometric factor
    for a |t|^(-(d-1)/k) tail, falls below tol relative to the closed form.
    """
    if d < k + 1:
        raise ValueError(f"the singular integral converges only for d >= k+1 (d={d}, k={k})")
    X = iroot(N, k)
    nu = N / X**k
    closed = main_term(k, d, N).value / X ** (d - k)
    rate = 2.0 ** (-(d - 1) / k)
    amplify = 1.0 / (1.0 - rate)
    T = 8.0
    total = _window_integral(k, d, nu, -T, T, tol * closed * 1e-3)
    while True:
        shell = (_window_integral(k, d, nu, T, 2 * T, tol * closed * 1e-3)
                 + _window_integral(k, d, nu, -2 * T, -T, tol * closed * 1e-3))
        total += shell
        T *= 2
        tail = abs(shell) * amplify
        if tail < tol * closed:
            break
        if T >= max_window:
            raise ConvergenceError(
                f"singular integral window reached {max_window} with tail {tail:g}")
    scale = float(X) ** (d - k)
    return SingularIntegral(total * scale, closed * scale, T / X**k, tail * scale)


def singular_integral_check(k: int, d: int, N: int, tol: float = 1e-5) -> float:
    """Relative deviation of the quadrature from the Gamma closed form."""
    return singular_integral(k, d, N, tol).deviation


# --------------------------------------------------------------------------
# approximation cascade


@dataclass(frozen=True)
class FirstApproximation:
    value: float
    arc_integral: complex
    truncated_sum: float
    per_arc: tuple = field(default=(), repr=False)


def approx_A1(k: int, d: int, N: int, alpha: float = 0.25, tol: float = 1e-10) -> FirstApproximation:
    """sum over major arcs of G(a/q)^d int_{arc} v(xi - a/q)^d e(-xi N) d xi.

    Every arc has the same half-width w, and the substitution
    xi = a/q + theta turns each arc integral into e(-aN/q) J with
    J = int_{-w}^{w} v(theta)^d e(-theta N) d theta, so J is computed once.
    """
    X = iroot(N, k)
    arcs = build_arcs(k, X, alpha)
    nu = N / X**k
    reach = arcs.halfWidth * X**k
    J = _window_integral(k, d, nu, -reach, reach, tol) * float(X) ** (d - k)
    series = truncated_series(k, d, N, arcs.Q)
    per_arc = tuple((q, float(series.terms[q - 1]) * J) for q in range(1, arcs.Q + 1))
    value = series.value * J
    return FirstApproximation(value.real, value, series.value, per_arc)


def approx_A2(k: int, d: int, N: int, alpha: float = 0.25) -> float:
    """Truncated singular series over q <= X^alpha times the main term."""
    X = iroot(N, k)
    Q = build_arcs(k, X, alpha).Q if X >= 2 else 1
    return truncated_series(k, d, N, Q).value * main_term(k, d, N).value


def approx_A3(k: int, d: int, N: int, P: int = 50, Q: int = 1000, tol: float = 1e-9,
              coeffs: Optional[Sequence[int]] = None) -> float:
    """Singular series (Euler product) times the main term."""
    result = euler_product(k, d, N, P, tol, coeffs, Q)
    return result.eulerProduct * main_term(k, d, N, coeffs).value


# --------------------------------------------------------------------------
# verification records

CSV_FIELDS = ("k", "d", "N", "alpha", "exactCount", "mainTerm", "singularSeries", "Mk", "mk",
              "A1", "A2", "A3", "ratio", "delta1", "delta2", "delta3", "flags")


@dataclass(frozen=True)
class VerificationRecord:
    instance: WaringInstance
    alpha: float
    exactCount: int
    mainTerm: float
    singularSeries: float
    truncatedSeries: float
    Mk: float
    mk: float
    A1: float
    A2: float
    A3: float
    flags: tuple = ()

    @property
    def ratio(self) -> float:
        return self.exactCount / (self.singularSeries * self.mainTerm)

    @property
    def cascadeDeltas(self) -> tuple[float, float, float]:
        mt = self.mainTerm
        return (abs(self.Mk - self.A1) / mt, abs(self.A1 - self.A2) / mt,
                abs(self.A2 - self.A3) / mt)

    def row(self) -> dict:
        inst = self.instance
        d1, d2, d3 = self.cascadeDeltas
        f = _fmt
        return {
            "k": inst.k, "d": inst.d, "N": inst.N, "alpha": f(self.alpha),
            "exactCount": str(self.exactCount), "mainTerm": f(self.mainTerm),
            "singularSeries": f(self.singularSeries), "Mk": f(self.Mk), "mk": f(self.mk),
            "A1": f(self.A1), "A2": f(self.A2), "A3": f(self.A3), "ratio": f(self.ratio),
            "delta1": f(d1), "delta2": f(d2), "delta3": f(d3), "flags": ";".join(self.flags),
        }

    def to_dict(self) -> dict:
        out = self.row()
        out["flags"] = list(self.flags)
        if self.instance.coeffs is not None:
            out["coeffs"] = list(self.instance.coeffs)
        return out


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def records_to_csv(records: Sequence[VerificationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


def records_to_json(records: Sequence[VerificationRecord]) -> str:
    return json.dumps([rec.to_dict() for rec in records], indent=1)


def regime_flags(instance: WaringInstance) -> list[str]:
    k, d, N = instance.k, instance.d, instance.N
    flags = ["N>=d^3" if N >= d**3 else "N<d^3",
             "N>=d^d" if math.log(N) >= d * math.log(d) else "N<d^d"]
    if not positivity_guaranteed(k, d):
        flags.append("d<2^k+1")
    return flags


def verify(instance: WaringInstance, alpha: float = 0.25, P: int = 50, Q: int = 1000,
           tol: float = 1e-9, split_tol: float = 1e-8) -> VerificationRecord:
    """Exact count, exact arc split, cascade A1/A2/A3 and the singular series for one N."""
    k, d, N = instance.k, instance.d, instance.N
    flags = regime_flags(instance)
    exact = count_exact(instance).count
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        series = euler_product(k, d, N, P, tol, instance.coeffs, Q)
    mt = main_term(k, d, N, instance.coeffs).value
    S = series.eulerProduct
    if not instance.is_plain:
        flags.append("cascade_plain_only")
        nan = math.nan
        return VerificationRecord(instance, alpha, exact, mt, S, series.truncatedSum,
                                  nan, nan, nan, nan, S * mt, tuple(flags))
    X = instance.X
    if X < 2:
        raise WaringError(f"X = floor(N^(1/k)) = {X}; the arc decomposition needs X >= 2")
    ladder = fourier_ladder(k, d, X)
    if ladder[N] != exact:
        raise WaringError(f"ladder coefficient {ladder[N]} disagrees with exact count {exact}")
    arcs = build_arcs(k, X, alpha)
    Mk = major_arc_integral(ladder, N, arcs)
    mk = minor_arc_integral(ladder, N, arcs)
    if abs(mk.real - (exact - Mk.real)) > split_tol * max(1, exact):
        flags.append("minor_arc_crosscheck_failed")
    first = approx_A1(k, d, N, alpha)
    A2 = truncated_series(k, d, N, arcs.Q).value * mt
    if series.discrepancy > series.tailEstimate:
        flags.append("singular_dual_form_mismatch")
    return VerificationRecord(instance, alpha, exact, mt, S, series.truncatedSum,
                              Mk.real, mk.real, first.value, A2, S * mt, tuple(flags))


@dataclass
class ScanResult:
    records: list
    errors: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def half_medians(self, key) -> tuple[float, float]:
        """Median of key(record) over the lower and upper half of the N grid."""
        values = [key(r) for r in self.records]
        half = len(values) // 2
        if half == 0:
            raise ValueError("need at least two records")
        return statistics.median(values[:half]), statistics.median(values[-half:])

    def to_csv(self) -> str:
        return records_to_csv(self.records)


def worker_count() -> int:
    raw = os.environ.get("WARING_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"WARING_THREADS must be an integer, got {raw!r}") from None


def scan(k: int, d: int, Ns: Sequence[int], alpha: float = 0.25, P: int = 50, Q: int = 1000,
         tol: float = 1e-9) -> ScanResult:
    """verify() for each N of an ascending grid; failures are collected, not raised."""
    Ns = list(Ns)
    if Ns != sorted(Ns):
        raise ValueError("N grid must be sorted ascending")

    def one(N):
        try:
            return verify(WaringInstance(k, d, N), alpha, P, Q, tol), None
        except (WaringError, ValueError) as exc:
            return None, (N, str(exc))

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        outcomes = list(pool.map(one, Ns))
    return ScanResult([r for r, _ in outcomes if r is not None],
                      [e for _, e in outcomes if e is not None])
