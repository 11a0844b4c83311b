"""Major/minor arc decomposition and exact integration over arcs.

(f_X)^d = sum_m r_m e(m xi) is a finite Fourier series, so the integral of
(f_X)^d e(-N xi) over any interval is a finite sum of elementary terms.
Arc endpoints are kept in the form a/q + offset so that the large phases
(m - N) a/q are reduced exactly in integers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterator, NamedTuple, Optional, Sequence, Union

import numpy as np

from . import _poly
from .core import MEMORY_BUDGET
from .errors import CapacityError
from .expsums import weyl_sums_on_grid


@dataclass(frozen=True, order=True)
class ReducedFraction:
    """a/q with gcd(a, q) = 1 and 1 <= a <= q (so 0 is written 1/1)."""

    a: int
    q: int
    flagged: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.q < 1 or not 1 <= self.a <= self.q:
            raise ValueError(f"need 1 <= a <= q, got {self.a}/{self.q}")
        if math.gcd(self.a, self.q) != 1:
            raise ValueError(f"{self.a}/{self.q} is not reduced")

    @property
    def value(self) -> float:
        return self.a / self.q

    def __str__(self):
        return f"{self.a}/{self.q}"


class Point(NamedTuple):
    """The real number a/q + offset."""

    a: int
    q: int
    offset: float = 0.0

    @property
    def value(self) -> float:
        return self.a / self.q + self.offset

    @classmethod
    def coerce(cls, x) -> "Point":
        if isinstance(x, Point):
            return x
        if isinstance(x, Rational):
            return cls(int(x.numerator), int(x.denominator), 0.0)
        fr = Fraction(float(x)).limit_denominator(10**6)
        if float(fr) == float(x):
            return cls(fr.numerator, fr.denominator, 0.0)
        return cls(0, 1, float(x))


def _length(lo: Point, hi: Point) -> float:
    return float(Fraction(hi.a, hi.q) - Fraction(lo.a, lo.q)) + (hi.offset - lo.offset)


@dataclass(frozen=True)
class Arc:
    center: ReducedFraction
    lo: Point
    hi: Point

    @property
    def length(self) -> float:
        return _length(self.lo, self.hi)


def major_arc_bound(X: int, alpha: float) -> int:
    """floor(X ** alpha), robust to float rounding at exact powers."""
    Q = int(math.floor(X**alpha))
    while (Q + 1) <= X**alpha * (1 + 1e-12):
        Q += 1
    while Q > 1 and Q > X**alpha * (1 + 1e-12):
        Q -= 1
    return max(Q, 1)


@dataclass(frozen=True)
class ArcDecomposition:
    k: int
    X: int
    alpha: float
    Q: int
    halfWidth: float
    arcs: tuple[Arc, ...]
    totalMajorMeasure: float

    def centers(self) -> list[ReducedFraction]:
        seen = []
        for arc in self.arcs:
            if arc.center not in seen:
                seen.append(arc.center)
        return sorted(seen, key=lambda c: (c.q, c.a))

    def minor_intervals(self) -> list[tuple[Point, Point]]:
        out = []
        cursor = Point(0, 1, 0.0)
        for arc in self.arcs:
            if arc.lo.value > cursor.value:
                out.append((cursor, arc.lo))
            cursor = arc.hi
        if cursor.value < 1.0:
            out.append((cursor, Point(1, 1, 0.0)))
        return out

    def locate(self, xi) -> Optional[ReducedFraction]:
        """Center of the major arc containing xi, or None on the minor arcs.

        Any center a/q with q <= Q lying within halfWidth of xi is a
        convergent of xi (Legendre), so only convergents are tested.
        """
        x = xi if isinstance(xi, Rational) else Fraction(float(xi))
        x -= math.floor(x)
        for p, q in convergents(x):
            if q > self.Q:
                break
            dist = abs(x - Fraction(p, q))
            if p in (0, q):
                dist = min(abs(x), abs(1 - x))
            if float(dist) <= self.halfWidth:
                return ReducedFraction(1, 1) if p in (0, q) else ReducedFraction(p, q)
        return None

    def locate_by_scan(self, xi) -> Optional[ReducedFraction]:
        x = float(xi) % 1.0
        for arc in self.arcs:
            if arc.lo.value <= x <= arc.hi.value:
                return arc.center
        return None

    def to_json(self) -> str:
        return json.dumps({
            "k": self.k, "X": self.X, "alpha": self.alpha, "Q": self.Q,
            "halfWidth": self.halfWidth,
            "totalMajorMeasure": self.totalMajorMeasure,
            "arcs": [{"center": str(a.center), "lo": repr(a.lo.value), "hi": repr(a.hi.value)}
                     for a in self.arcs],
        })


def build_arcs(k: int, X: int, alpha: float = 0.25) -> ArcDecomposition:
    """All arcs |xi - a/q| <= X^(alpha - k), q <= X^alpha, clipped to [0, 1].

    The arc around 1/1 wraps through 0 and is stored as [0, w] and [1-w, 1].
    """
    if not 0 < alpha < 1 / 3:
        raise ValueError(f"alpha must lie in (0, 1/3), got {alpha}")
    if X < 2:
        raise ValueError(f"X must be >= 2, got {X}")
    Q = major_arc_bound(X, alpha)
    w = float(X) ** (alpha - k)
    arcs = [Arc(ReducedFraction(1, 1), Point(0, 1, 0.0), Point(0, 1, min(w, 1.0)))]
    for q in range(2, Q + 1):
        for a in range(1, q):
            if math.gcd(a, q) != 1:
                continue
            lo = Point(a, q, -w) if a / q - w > 0 else Point(0, 1, 0.0)
            hi = Point(a, q, w) if a / q + w < 1 else Point(1, 1, 0.0)
            arcs.append(Arc(ReducedFraction(a, q), lo, hi))
    arcs.append(Arc(ReducedFraction(1, 1), Point(1, 1, -min(w, 1.0)), Point(1, 1, 0.0)))
    arcs.sort(key=lambda arc: arc.lo.value)
    for left, right in zip(arcs, arcs[1:]):
        if not left.hi.value < right.lo.value:
            raise ValueError(
                f"major arcs around {left.center} and {right.center} overlap "
                f"(X={X}, alpha={alpha}); the decomposition needs disjoint arcs")
    total = math.fsum(arc.length for arc in arcs)
    return ArcDecomposition(k=k, X=X, alpha=alpha, Q=Q, halfWidth=w, arcs=tuple(arcs),
                            totalMajorMeasure=total)


def convergents(x: Fraction) -> Iterator[tuple[int, int]]:
    """Continued-fraction convergents p/q of a rational x."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    num, den = x.numerator, x.denominator
    while den:
        a, rem = divmod(num, den)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        yield p1, q1
        num, den = den, rem


def dirichlet_approx(xi, Q: int) -> ReducedFraction:
    """Smallest-denominator convergent a/q, q <= Q, with |xi - a/q| <= 1/(qQ).

    If no convergent qualifies (not possible for exact input) the last
    convergent with q <= Q is returned with ``flagged=True``.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    x = xi if isinstance(xi, Rational) else Fraction(float(xi))
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise ValueError(f"xi must lie in [0, 1], got {float(x)}")
    best = None
    for p, q in convergents(x):
        if q > Q:
            break
        best = (p, q)
        if abs(x - Fraction(p, q)) <= Fraction(1, q * Q):
            return _as_reduced(p, q)
    p, q = best
    return _as_reduced(p, q, flagged=True)


def _as_reduced(p: int, q: int, flagged: bool = False) -> ReducedFraction:
    if p == 0 or p == q:
        return ReducedFraction(1, 1, flagged)
    return ReducedFraction(p, q, flagged)


def minor_arc_samples(decomposition: ArcDecomposition, count: int) -> list[float]:
    """``count`` deterministic points of the minor arcs, peak candidates first.

    |f_X| peaks in windows of width ~X^(-k) around rationals, too narrow for
    an even grid.  The sample list therefore starts with the minor-arc edges
    next to each major arc, then the Farey points a/q with q > Q in order of
    q, and fills any remaining slots evenly by measure.
    """
    intervals = decomposition.minor_intervals()
    candidates = []
    nudge = 1e-9 * decomposition.halfWidth
    for lo, hi in intervals:
        candidates.extend((lo.value + nudge, hi.value - nudge))
    q = decomposition.Q + 1
    while len(candidates) < count and q <= decomposition.X**decomposition.k:
        for a in range(1, q):
            if math.gcd(a, q) == 1:
                candidates.append(a / q)
        q += 1
    out = []
    for x in candidates:
        if len(out) == count:
            break
        if decomposition.locate(x) is None and x not in out:
            out.append(x)
    lengths = [_length(lo, hi) for lo, hi in intervals]
    total = math.fsum(lengths)
    starts = np.cumsum([0.0] + lengths)
    fill = count - len(out)
    for i in range(fill):
        pos = (i + 0.5) * total / fill
        j = min(int(np.searchsorted(starts, pos, side="right")) - 1, len(intervals) - 1)
        out.append(float(intervals[j][0].value + (pos - starts[j])))
    return out


# --------------------------------------------------------------------------
# Fourier ladder and exact integrals


@dataclass(frozen=True)
class FourierLadder:
    """coeffs[m] = #{n in [1..X]^d : sum n_i^k = m}, 0 <= m <= d X^k."""

    k: int
    d: int
    X: int
    coeffs: tuple[int, ...]

    def __getitem__(self, m: int) -> int:
        return self.coeffs[m] if 0 <= m < len(self.coeffs) else 0

    @cached_property
    def modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Support of the ladder and its coefficients as floats."""
        m = np.array([i for i, c in enumerate(self.coeffs) if c], dtype=np.int64)
        return m, np.array([float(self.coeffs[i]) for i in m])


def fourier_ladder(k: int, d: int, X: int, budget: Optional[int] = None) -> FourierLadder:
    length = d * X**k + 1
    budget = MEMORY_BUDGET if budget is None else budget
    if length > budget:
        raise CapacityError(f"ladder of length {length} exceeds budget {budget}")
    base = [0] * (X**k + 1)
    for n in range(1, X + 1):
        base[n**k] = 1
    return FourierLadder(k, d, X, tuple(_poly.power(base, d, length)))


def circle_integral(ladder: FourierLadder, N: int) -> int:
    """int_0^1 (f_X)^d e(-N xi) d xi, which is exactly the coefficient at N."""
    return ladder[N]


def circle_integral_sampled(ladder: FourierLadder, N: int, M: Optional[int] = None) -> complex:
    """Mean of (f_X)^d e(-N xi) over M equispaced xi.

    Exact once M > max(d X^k, N): then no mode m != N of the ladder is
    congruent to N mod M.  The default is that smallest M.
    """
    k, d, X = ladder.k, ladder.d, ladder.X
    M = max(d * X**k, N) + 1 if M is None else M
    f = weyl_sums_on_grid(k, X, M)
    j = np.arange(M, dtype=np.int64)
    twist = np.exp(-2j * np.pi * (((N % M) * j) % M) / M)
    return complex(np.sum(f**d * twist) / M)


Interval = Union[tuple, Sequence]


def arc_integral(ladder: FourierLadder, N: int, interval: Interval) -> complex:
    """int_lo^hi (f_X)^d e(-N xi) d xi summed mode by mode in closed form."""
    lo, hi = (Point.coerce(p) for p in interval)
    coeffs = ladder.coeffs
    modes, weights = ladder.modes
    keep = modes != N
    t, weights = modes[keep] - N, weights[keep]
    order = np.argsort(np.abs(t), kind="stable")
    t, weights = t[order], weights[order]

    def endpoint(p: Point) -> np.ndarray:
        rational = ((t % p.q) * p.a) % p.q / p.q
        return np.exp(2j * np.pi * rational) * np.exp(2j * np.pi * (t * p.offset))

    terms = weights * (endpoint(hi) - endpoint(lo)) / (2j * np.pi * t)
    total = complex(math.fsum(terms.real), math.fsum(terms.imag))
    if 0 <= N < len(coeffs) and coeffs[N]:
        total += float(coeffs[N]) * _length(lo, hi)
    return total


def major_arc_integral(ladder: FourierLadder, N: int, decomposition: ArcDecomposition) -> complex:
    parts = [arc_integral(ladder, N, (a.lo, a.hi)) for a in decomposition.arcs]
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def minor_arc_integral(ladder: FourierLadder, N: int, decomposition: ArcDecomposition) -> complex:
    parts = [arc_integral(ladder, N, iv) for iv in decomposition.minor_intervals()]
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))
