"""Weyl sums, complete Gauss sums, the oscillatory integral v, and bound checks.

Phases of the form x * n**k are always reduced modulo 1 in exact integer
arithmetic (floats are converted through their exact binary ratio) before
any trigonometric evaluation.
"""
from __future__ import annotations

import cmath
import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Optional, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from . import _poly
from .errors import ConvergenceError

TWO_PI = 2.0 * math.pi


def sigma(k: int) -> float:
    """Weyl exponent 1/(k(k-1))."""
    return 1.0 / (k * (k - 1))


def e(x: float) -> complex:
    return cmath.exp(2j * math.pi * x)


def exact_ratio(x) -> tuple[int, int]:
    """(p, q) with x = p/q exactly and 0 <= p < q."""
    if isinstance(x, Rational):
        fr = Fraction(x.numerator, x.denominator)
    else:
        fr = Fraction(float(x))
    fr -= math.floor(fr)
    return fr.numerator, fr.denominator


def _phase_to_complex(residues: np.ndarray, q: int) -> np.ndarray:
    return np.exp(2j * np.pi * (residues / q))


def _fsum_complex(values: np.ndarray) -> complex:
    return complex(math.fsum(values.real), math.fsum(values.imag))


def weyl_sum(k: int, X: int, xi) -> complex:
    """f_X(xi) = sum_{n=1}^X e(xi n^k)."""
    if X < 1:
        raise ValueError("X must be >= 1")
    p, q = exact_ratio(xi)
    if p == 0:
        return complex(X, 0.0)
    phases = np.array([((p * pow(n, k, q)) % q) / q for n in range(1, X + 1)])
    return _fsum_complex(np.exp(2j * np.pi * phases))


def power_residues(k: int, n_max: int, q: int) -> np.ndarray:
    """n**k mod q for n = 1..n_max, as int64."""
    n = np.arange(1, n_max + 1, dtype=np.int64) % q
    out = np.ones_like(n)
    for _ in range(k):
        out = (out * n) % q
    return out


def weyl_sums_on_grid(k: int, X: int, M: int) -> np.ndarray:
    """f_X(j/M) for j = 0..M-1 through the histogram of n^k mod M."""
    hist = np.bincount(power_residues(k, X, M), minlength=M).astype(float)
    return np.fft.ifft(hist) * M


@lru_cache(maxsize=4096)
def _gauss_table_cached(k: int, q: int) -> np.ndarray:
    rho = np.bincount(power_residues(k, q, q), minlength=q).astype(float)
    table = np.fft.ifft(rho)
    table.setflags(write=False)
    return table


def gauss_table(k: int, q: int) -> np.ndarray:
    """G(a/q) for a = 0..q-1 (a need not be coprime to q)."""
    return _gauss_table_cached(int(k), int(q))


def gauss_sum(k: int, a: int, q: int) -> complex:
    """G(a/q) = (1/q) sum_{r=1}^q e(a r^k / q) via the residue histogram."""
    if q < 1 or not 1 <= a <= q:
        raise ValueError(f"need 1 <= a <= q, got a={a}, q={q}")
    if math.gcd(a, q) != 1:
        raise ValueError(f"gcd(a, q) must be 1, got gcd({a}, {q}) = {math.gcd(a, q)}")
    if q == 1:
        return complex(1.0, 0.0)
    rho = np.bincount(power_residues(k, q, q), minlength=q)
    s = np.nonzero(rho)[0]
    terms = rho[s] * _phase_to_complex((a * s) % q, q)
    return _fsum_complex(terms) / q


def gauss_sum_direct(k: int, q: int, a_values: Optional[Sequence[int]] = None) -> np.ndarray:
    """G(a/q) by summing every term e(a r^k/q), r = 1..q, for each a."""
    a = np.arange(q, dtype=np.int64) if a_values is None else np.asarray(a_values, dtype=np.int64)
    res = power_residues(k, q, q)
    roots = _phase_to_complex(np.arange(q), q)
    out = np.empty(len(a), dtype=complex)
    chunk = max(1, 4_000_000 // max(q, 1))
    for i in range(0, len(a), chunk):
        idx = np.outer(a[i:i + chunk] % q, res) % q
        out[i:i + chunk] = roots[idx].sum(axis=1) / q
    return out


# --------------------------------------------------------------------------
# v(theta) = int_0^X e(theta z^k) dz

_GL20 = roots_legendre(20)
_GL30 = roots_legendre(30)


def _gl_panels(f, j: np.ndarray, lo: np.ndarray, hi: np.ndarray, rule):
    x, w = rule
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    vals = f(j[:, None], mid[:, None] + half[:, None] * x[None, :])
    return half * (vals @ w), half * (np.abs(vals) @ w)


def _adaptive_panels(f, j: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                     tol: float, max_panels: int) -> complex:
    """Sum of int_lo^hi f(j, x) dx over panels, bisecting until converged.

    Panels carry an integer offset ``j`` next to local coordinates in
    [0, 1] so that f can reduce its phase exactly.
    """
    width = float(np.sum(hi - lo))
    total = 0.0 + 0.0j
    while len(lo):
        if len(lo) > max_panels:
            raise ConvergenceError(
                f"panel budget {max_panels} exhausted before reaching tol={tol:g}")
        coarse, _ = _gl_panels(f, j, lo, hi, _GL20)
        fine, scale = _gl_panels(f, j, lo, hi, _GL30)
        err = np.abs(fine - coarse)
        ok = err <= np.maximum(tol * (hi - lo) / width, 1e-14 * scale)
        total += _fsum_complex(fine[ok])
        j, lo, hi = j[~ok], lo[~ok], hi[~ok]
        if len(lo):
            mid = 0.5 * (lo + hi)
            j = np.concatenate([j, j])
            lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return total


def _head_integral(s: float, theta: float, u1: float, tol: float) -> complex:
    """int_0^u1 u^(s-1) e(theta u) du with the singular weight built in."""
    def rule(n):
        x, w = roots_jacobi(n, 0.0, s - 1.0)
        u = 0.5 * u1 * (1.0 + x)
        return (0.5 * u1) ** s * np.sum(w * np.exp(2j * np.pi * theta * u))
    a, b = rule(12), rule(20)
    if abs(a - b) > max(tol, 1e-13 * abs(b)):
        raise ConvergenceError("endpoint panel did not converge")
    return complex(b)


def v_integral(k: int, X: float, theta: float, tol: float = 1e-10,
               max_panels: int = 200_000) -> complex:
    """v(theta) = int_0^X e(theta z^k) dz by adaptive panel quadrature.

    Works in u = z^k, where the integrand is u^(1/k - 1) e(theta u)/k.  The
    first half-period carries the singular factor and is done with
    Gauss-Jacobi; the rest is split at half-periods of the phase and refined
    adaptively.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if X <= 0:
        return 0j
    theta = float(theta)
    if theta == 0.0:
        return complex(X)
    s = 1.0 / k
    U = float(X) ** k
    half = 0.5 / abs(theta)
    u1 = min(U, half)
    head = _head_integral(s, theta, u1, tol / 2)
    if u1 >= U:
        return head / k
    # u = u1 + half * (j + x), x in [0, 1]; then theta*u = sign * (1 + j + x) / 2
    span = (U - u1) / half
    n_panels = math.ceil(span)
    if n_panels > max_panels:
        raise ConvergenceError(
            f"v_integral needs {n_panels} half-period panels; budget is {max_panels}")
    j = np.arange(n_panels)
    lo = np.zeros(n_panels)
    hi = np.ones(n_panels)
    hi[-1] = span - (n_panels - 1)
    sign = 1.0 if theta > 0 else -1.0

    def f(jj, x):
        parity = np.where((jj + 1) % 2 == 0, 1.0, -1.0)
        u = u1 + half * (jj + x)
        return half * u ** (s - 1.0) * parity * np.exp(1j * np.pi * sign * x)

    body = _adaptive_panels(f, j, lo, hi, tol * k / 2, max_panels)
    return (head + body) / k


_SMALL_T = 16.0
# composite Gauss-Legendre rule on [0, 1]: 16 panels x 30 nodes
_UNIT_NODES = ((np.arange(16)[:, None] + 0.5 * (1.0 + _GL30[0][None, :])) / 16).ravel()
_UNIT_WEIGHTS = np.tile(_GL30[1] / 32, 16)


def _unit_v(k: int, t: np.ndarray) -> np.ndarray:
    """w(t) = int_0^1 e(t z^k) dz for t >= 0."""
    s = 1.0 / k
    out = np.empty(t.shape, dtype=complex)
    small = t <= _SMALL_T
    if small.any():
        zk = _UNIT_NODES**k
        idx = np.nonzero(small)[0]
        for i in range(0, len(idx), 2048):
            blk = idx[i:i + 2048]
            out[blk] = np.exp(2j * np.pi * np.outer(t[blk], zk)) @ _UNIT_WEIGHTS
    big = ~small
    if big.any():
        # z^(-s) gamma(s, z) with z = -2 pi i t; upper part by its asymptotic series
        z = -2j * np.pi * t[big]
        lead = math.gamma(s) * (2 * np.pi * t[big]) ** (-s) * np.exp(0.5j * np.pi * s)
        term = np.ones_like(z)
        series = np.ones_like(z)
        for n in range(1, 200):
            term = term * (s - n) / z
            series += term
            if np.max(np.abs(term)) < 1e-17:
                break
        upper = np.exp(-z) / z * series
        out[big] = (lead - upper) / k
    return out


def v_values(k: int, X: float, theta) -> np.ndarray:
    """Vectorized v(theta) = X * w(theta X^k), w evaluated semi-analytically.

    Small arguments use a composite Gauss-Legendre rule in z; large ones use the incomplete-gamma representation with its asymptotic series.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    t = theta * float(X) ** k
    w = _unit_v(k, np.abs(t))
    w = np.where(t < 0, np.conj(w), w)
    return float(X) * w


# --------------------------------------------------------------------------
# Hua moment


def hua_threshold(k: int, X: int) -> int:
    """Sample counts M above this make the equispaced mean exact."""
    return (k * (k + 1) // 2) * X**k


def hua_moment(k: int, X: int, M: Optional[int] = None) -> float:
    """int_0^1 |f_X|^(k(k+1)) as the mean over M equispaced samples.

    |f_X|^(2m), m = k(k+1)/2, is a trigonometric polynomial with frequencies
    in [-m X^k, m X^k], so any M > m X^k gives the integral without aliasing.
    """
    threshold = hua_threshold(k, X)
    if M is None:
        M = threshold + 1
    if M <= threshold:
        raise ValueError(f"M={M} must exceed m*X^k = {threshold} for an exact moment")
    f = weyl_sums_on_grid(k, X, M)
    mag2 = f.real**2 + f.imag**2
    return math.fsum(mag2 ** (k * (k + 1) // 2)) / M


def diagonal_solution_count(k: int, X: int, m: int) -> int:
    """#{(x, y) in [1..X]^m x [1..X]^m : sum x_i^k = sum y_i^k}."""
    base = [0] * (X**k + 1)
    for n in range(1, X + 1):
        base[n**k] = 1
    r = _poly.power(base, m, m * X**k + 1)
    return sum(c * c for c in r)


# --------------------------------------------------------------------------
# Bound measurements

BOUND_NAMES = ("weyl_minor", "gauss_decay", "hua_moment", "v_decay")


@dataclass(frozen=True)
class BoundCheckReport:
    boundName: str
    parameterGrid: tuple
    worstRatio: float
    worstWitness: tuple
    fittedExponent: Optional[float] = None
    ratios: tuple = field(default=(), repr=False)

    CSV_FIELDS = ("boundName", "gridSize", "worstRatio", "witness", "fittedExponent")

    def csv_row(self) -> dict:
        return {
            "boundName": self.boundName,
            "gridSize": len(self.parameterGrid),
            "worstRatio": f"{self.worstRatio:.17g}",
            "witness": " ".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                                for v in self.worstWitness),
            "fittedExponent": "" if self.fittedExponent is None else f"{self.fittedExponent:.17g}",
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(self.csv_row())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "boundName": self.boundName,
            "gridSize": len(self.parameterGrid),
            "worstRatio": self.worstRatio,
            "worstWitness": list(self.worstWitness),
            "fittedExponent": self.fittedExponent,
        })


def _bound_ratio(name: str, point: tuple, eps: float) -> float:
    if name == "gauss_decay":
        k, a, q = point
        return abs(gauss_sum(k, a, q)) * q ** (sigma(k) - eps)
    if name == "weyl_minor":
        k, X, alpha, xi = point
        return abs(weyl_sum(k, X, xi)) / X ** (1 + eps - alpha * sigma(k))
    if name == "v_decay":
        k, X, theta = point
        shape = X * (1 + X**k * abs(theta)) ** (-1.0 / k)
        return abs(v_values(k, X, theta)[0]) / shape
    if name == "hua_moment":
        k, X = point
        return hua_moment(k, X) / X ** (k * k + eps)
    raise ValueError(f"unknown bound {name!r}; expected one of {BOUND_NAMES}")


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope)


def measure_bound(boundName: str, grid: Sequence[tuple], eps: float = 0.0) -> BoundCheckReport:
    """Ratio of each measured quantity to its bound shape (no constant).

    The first grid point attaining the supremum is the witness.  For
    ``hua_moment`` the log-log slope of the moment against X is fitted.
    """
    grid = [tuple(p) for p in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    if boundName not in BOUND_NAMES:
        raise ValueError(f"unknown bound {boundName!r}; expected one of {BOUND_NAMES}")
    ratios = [_bound_ratio(boundName, p, eps) for p in grid]
    worst = int(np.argmax(ratios))
    fitted = None
    if boundName == "hua_moment" and len(grid) >= 2:
        Xs = [p[1] for p in grid]
        moments = [r * p[1] ** (p[0] ** 2 + eps) for r, p in zip(ratios, grid)]
        fitted = fit_loglog_slope(Xs, moments)
    return BoundCheckReport(boundName, tuple(grid), float(ratios[worst]), grid[worst],
                            fitted, tuple(ratios))
