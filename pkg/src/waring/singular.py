"""Singular series: arc sums A_N(q), truncated sums, local densities, Euler product.

A_N(q) = sum_{(a, q) = 1} prod_i G(c_i a / q) e(-N a / q).  Local densities
chi_N(p) = sum_h A_N(p^h) are computed twice: from the arc sums and from an
exact count of solutions of sum c_i x_i^k = N modulo p^h.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from sympy import primerange

from . import _poly
from .errors import StabilizationError
from .expsums import gauss_table

#: decay exponent of |A_N(q)| used for tail estimates
TAIL_EXPONENT = 1.1
#: largest modulus p^h for which solutions are counted exactly
CONGRUENCE_CAP = 10**7


def _weights(d: int, coeffs: Optional[Sequence[int]]) -> Counter:
    if coeffs is None:
        return Counter({1: d})
    if len(coeffs) != d:
        raise ValueError(f"coeffs must have length d={d}")
    return Counter(int(c) for c in coeffs)


def positivity_guaranteed(k: int, d: int) -> bool:
    return d >= 2**k + 1


@dataclass(frozen=True)
class ArcSum:
    q: int
    value: float
    imag_residual: float = 0.0


def _arc_terms(k: int, weights: Counter, N: int, q: int):
    a = np.arange(1, q + 1, dtype=np.int64)
    a = a[np.gcd(a, q) == 1]
    term = np.ones(len(a), dtype=complex)
    for c, mult in weights.items():
        term = term * gauss_table(k, q)[(c * a) % q] ** mult
    phase = ((N % q) * a) % q / q
    return a, term * np.exp(-2j * np.pi * phase)


def arc_sum(k: int, d: int, N: int, q: int, coeffs: Optional[Sequence[int]] = None) -> ArcSum:
    """A_N(q), with the conjugate terms a and q - a combined into a real value."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if q == 1:
        return ArcSum(1, 1.0, 0.0)
    a, terms = _arc_terms(k, _weights(d, coeffs), N, q)
    lower = terms[2 * a < q].real
    middle = terms[2 * a == q].real
    value = 2.0 * math.fsum(lower) + math.fsum(middle)
    return ArcSum(q, value, math.fsum(terms.imag))


def arc_sums(k: int, d: int, N: int, Q: int, coeffs: Optional[Sequence[int]] = None) -> np.ndarray:
    """A_N(q) for q = 1..Q (index 0 holds q = 1)."""
    return np.array([arc_sum(k, d, N, q, coeffs).value for q in range(1, Q + 1)])


@dataclass(frozen=True)
class TruncatedSeries:
    value: float
    Q: int
    partial_sums: np.ndarray = field(repr=False)
    terms: np.ndarray = field(repr=False)
    decay_constant: float = 0.0

    def __float__(self):
        return self.value

    def tail_estimate(self, start: Optional[int] = None) -> float:
        """c * sum_{q > start} q^(-1.1) <= c * start^(-0.1) / 0.1."""
        start = self.Q if start is None else start
        return self.decay_constant * start ** (1 - TAIL_EXPONENT) / (TAIL_EXPONENT - 1)


def truncated_series(k: int, d: int, N: int, Q: int,
                     coeffs: Optional[Sequence[int]] = None) -> TruncatedSeries:
    """sum_{q <= Q} A_N(q) with the per-q partial sums and measured decay constant.

    The decay constant is max_{2 <= q <= Q} |A_N(q)| q^1.1.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    terms = arc_sums(k, d, N, Q, coeffs)
    partial = np.cumsum(terms)
    q = np.arange(1, Q + 1)
    c = float(np.max(np.abs(terms[1:]) * q[1:] ** TAIL_EXPONENT)) if Q > 1 else 0.0
    return TruncatedSeries(math.fsum(terms), Q, partial, terms, c)


# --------------------------------------------------------------------------
# local densities


@dataclass(frozen=True)
class LocalDensity:
    p: int
    hUsed: int
    value: float
    stabilized: bool
    congruence_value: float
    partials: tuple = field(default=(), repr=False)


def p_adic_valuation(n: int, p: int) -> int:
    if n == 0:
        return 0
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def height_floor(k: int, N: int, p: int, coeffs: Optional[Sequence[int]] = None) -> int:
    """Smallest height at which the stabilization test is trusted.

    Solutions lift from p^gamma upward once p^tau || k is accounted for
    (gamma = tau + 1, or tau + 2 when p = 2); the valuations of N and of
    the weights shift that point.
    """
    tau = p_adic_valuation(k, p)
    gamma = tau + (2 if p == 2 else 1)
    shift = p_adic_valuation(N, p)
    if coeffs is not None:
        shift += max(p_adic_valuation(c, p) for c in coeffs)
    return max(2, gamma + shift + 1)


def height_budget(k: int, N: int, p: int) -> int:
    return 2 * k + math.ceil(math.log(max(N, 2), p)) + 4


def congruence_density(k: int, d: int, N: int, p: int, h: int,
                       coeffs: Optional[Sequence[int]] = None) -> Fraction:
    """p^(h(1-d)) * #{x mod p^h : sum c_i x_i^k = N mod p^h}, exactly."""
    L = p**h
    if L > CONGRUENCE_CAP:
        raise StabilizationError(f"modulus {p}^{h} exceeds the counting cap {CONGRUENCE_CAP}")
    residues = [pow(x, k, L) for x in range(L)]
    total = None
    for c, mult in _weights(d, coeffs).items():
        hist = [0] * L
        for r in residues:
            hist[(c * r) % L] += 1
        part = _poly.cyclic_power(hist, mult, L)
        total = part if total is None else _poly.cyclic_multiply(total, part, L)
    return Fraction(total[N % L], L ** (d - 1))


def local_density(k: int, d: int, N: int, p: int, tol: float = 1e-9,
                  coeffs: Optional[Sequence[int]] = None,
                  max_height: Optional[int] = None) -> LocalDensity:
    """chi_N(p) from the arc sums S_h = sum_{j <= h} A_N(p^j), checked against counts.

    Stops at the first h past the lifting floor where S_h - S_{h-1} is below
    tol and the exact congruence density mod p^h agrees with S_h.
    """
    if d < 2:
        raise ValueError("d must be >= 2 for local densities")
    if p < 2 or not all(p % r for r in range(2, math.isqrt(p) + 1)):
        raise ValueError(f"p must be prime, got {p}")
    budget = height_budget(k, N, p) if max_height is None else max_height
    floor = height_floor(k, N, p, coeffs)
    partials = [1.0]
    for h in range(1, budget + 1):
        if p**h > CONGRUENCE_CAP:
            break
        partials.append(partials[-1] + arc_sum(k, d, N, p**h, coeffs).value)
        if h < floor or abs(partials[-1] - partials[-2]) >= tol:
            continue
        counted = float(congruence_density(k, d, N, p, h, coeffs))
        if abs(counted - partials[-1]) < tol * max(1.0, abs(counted)):
            return LocalDensity(p, h, partials[-1], True, counted, tuple(partials))
    raise StabilizationError(
        f"chi_N({p}) did not stabilize for k={k}, d={d}, N={N} within height {len(partials) - 1}",
        {"p": p, "partials": partials, "floor": floor, "budget": budget})


# --------------------------------------------------------------------------
# Euler product and cross-validation


@dataclass(frozen=True)
class SingularSeriesResult:
    k: int
    d: int
    N: int
    coeffs: Optional[tuple]
    truncatedSum: float
    Q: int
    eulerProduct: float
    P: int
    tailEstimate: float
    perPrime: tuple = ()
    flags: tuple = ()

    CSV_FIELDS = ("N", "d", "k", "Q", "P", "truncatedSum", "eulerProduct", "tailEstimate",
                  "perPrime")

    @property
    def value(self) -> float:
        return self.eulerProduct

    @property
    def discrepancy(self) -> float:
        return abs(self.truncatedSum - self.eulerProduct)

    def csv_row(self) -> dict:
        return {
            "N": self.N, "d": self.d, "k": self.k, "Q": self.Q, "P": self.P,
            "truncatedSum": f"{self.truncatedSum:.17g}",
            "eulerProduct": f"{self.eulerProduct:.17g}",
            "tailEstimate": f"{self.tailEstimate:.17g}",
            "perPrime": " ".join(f"{ld.p}:{ld.value:.17g}" for ld in self.perPrime),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(self.csv_row())
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {
            "N": self.N, "d": self.d, "k": self.k, "Q": self.Q, "P": self.P,
            "truncatedSum": self.truncatedSum, "eulerProduct": self.eulerProduct,
            "tailEstimate": self.tailEstimate,
            "perPrime": [{"p": ld.p, "h": ld.hUsed, "chi": ld.value,
                          "stabilized": ld.stabilized} for ld in self.perPrime],
            "flags": list(self.flags),
        }
        if self.coeffs is not None:
            out["coeffs"] = list(self.coeffs)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def euler_product(k: int, d: int, N: int, P: int = 50, tol: float = 1e-9,
                  coeffs: Optional[Sequence[int]] = None, Q: int = 1000) -> SingularSeriesResult:
    """prod_{p <= P} chi_N(p), reported alongside the truncated sum over q <= Q."""
    if P < 2:
        raise ValueError("P must be >= 2")
    flags = []
    if not positivity_guaranteed(k, d):
        warnings.warn(f"d={d} < 2^k + 1 = {2**k + 1}: positivity of the singular series "
                      "is not guaranteed", stacklevel=2)
        flags.append("d_below_2^k+1")
    factors = tuple(local_density(k, d, N, p, tol, coeffs) for p in primerange(2, P + 1))
    product = math.prod(f.value for f in factors)
    series = truncated_series(k, d, N, Q, coeffs)
    tail = series.tail_estimate(min(Q, P))
    return SingularSeriesResult(k, d, N, tuple(coeffs) if coeffs is not None else None,
                                series.value, Q, product, P, tail, factors, tuple(flags))


@dataclass(frozen=True)
class MultiplicativityReport:
    pairs: tuple
    errors: tuple
    tol: float

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tol


def multiplicativity_check(k: int, d: int, N: int, pairs: Sequence[tuple[int, int]],
                           coeffs: Optional[Sequence[int]] = None,
                           tol: float = 1e-9) -> MultiplicativityReport:
    """|A_N(q1 q2) - A_N(q1) A_N(q2)| for coprime pairs."""
    errors = []
    for q1, q2 in pairs:
        if math.gcd(q1, q2) != 1:
            raise ValueError(f"pair ({q1}, {q2}) is not coprime")
        joint = arc_sum(k, d, N, q1 * q2, coeffs).value
        split = arc_sum(k, d, N, q1, coeffs).value * arc_sum(k, d, N, q2, coeffs).value
        errors.append(abs(joint - split))
    return MultiplicativityReport(tuple(pairs), tuple(errors), tol)
