"""Problem instances and exact representation counts.

Everything here is integer arithmetic.  ``count_exact`` builds the ladder of
truncated convolutions ``r_1, ..., r_d``; ``count_bruteforce`` enumerates
tuples directly and serves as its independent oracle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional, Sequence

import gmpy2
import numpy as np

from . import _poly
from .errors import CapacityError

#: max number of big-integer cells (d * (N + 1)) a count table may hold
MEMORY_BUDGET = 50_000_000
#: max number of tuples count_bruteforce will enumerate
ENUMERATION_GUARD = 10**8


def iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return int(gmpy2.iroot(gmpy2.mpz(n), k)[0])


@dataclass(frozen=True)
class WaringInstance:
    """The triple (k, d, N), optionally with positive weights c_1..c_d."""

    k: int
    d: int
    N: int
    coeffs: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be an integer >= 1, got {self.d!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be an integer >= 1, got {self.N!r}")
        if self.coeffs is not None:
            c = tuple(int(x) for x in self.coeffs)
            if len(c) != self.d:
                raise ValueError(f"coeffs must have length d={self.d}, got {len(c)}")
            if any(x < 1 for x in c):
                raise ValueError("coeffs must be positive integers")
            if reduce(math.gcd, c) != 1:
                raise ValueError("coeffs must have gcd 1")
            object.__setattr__(self, "coeffs", c)

    @property
    def X(self) -> int:
        return iroot(self.N, self.k)

    @property
    def weights(self) -> tuple[int, ...]:
        return self.coeffs if self.coeffs is not None else (1,) * self.d

    @property
    def is_plain(self) -> bool:
        return self.coeffs is None or all(c == 1 for c in self.coeffs)


@dataclass(frozen=True)
class RepCountTable:
    """counts[j-1][n] = #{(n_1..n_j) in N^j : sum c_i n_i^k = n}, n <= N."""

    k: int
    d: int
    N: int
    counts: tuple[tuple[int, ...], ...]
    coeffs: Optional[tuple[int, ...]] = None

    def row(self, j: int) -> tuple[int, ...]:
        if not 1 <= j <= self.d:
            raise IndexError(f"row {j} outside 1..{self.d}")
        return self.counts[j - 1]

    def __call__(self, j: int, n: int) -> int:
        return self.row(j)[n]

    @property
    def count(self) -> int:
        return self.counts[-1][self.N]

    def to_json(self, all_rows: bool = False) -> str:
        rows = self.counts if all_rows else self.counts[-1:]
        payload = {"k": self.k, "d": self.d, "N": self.N}
        if self.coeffs is not None:
            payload["coeffs"] = list(self.coeffs)
        payload["counts"] = [[str(c) for c in r] for r in rows]
        return json.dumps(payload)


@dataclass(frozen=True)
class BallCount:
    k: int
    d: int
    N: int
    latticeCount: int
    volume: float
    log_volume: float = field(repr=False, default=0.0)

    @property
    def ratio(self) -> float:
        return math.exp(math.log(self.latticeCount) - self.log_volume)


def _check_budget(d: int, N: int, budget: Optional[int]) -> None:
    budget = MEMORY_BUDGET if budget is None else budget
    if d * (N + 1) > budget:
        raise CapacityError(
            f"table of d*(N+1) = {d * (N + 1)} cells exceeds budget {budget}; "
            "lower N or d, or raise the budget")


def power_indicator(k: int, n_max: int, scale: int = 1, length: Optional[int] = None) -> list[int]:
    """Row with a 1 at every scale * m**k <= n_max (m >= 1)."""
    length = n_max + 1 if length is None else length
    row = [0] * length
    m = 1
    while scale * m**k <= n_max and scale * m**k < length:
        row[scale * m**k] = 1
        m += 1
    return row


def count_exact(instance: WaringInstance, budget: Optional[int] = None,
                threshold: int = _poly.KRONECKER_THRESHOLD) -> RepCountTable:
    """Full ladder of representation counts up to ``instance.N``."""
    k, d, N = instance.k, instance.d, instance.N
    _check_budget(d, N, budget)
    rows = []
    current = None
    for c in instance.weights:
        base = power_indicator(k, N, scale=c)
        current = base if current is None else _poly.multiply(current, base, N + 1, threshold)
        rows.append(tuple(current))
    return RepCountTable(k=k, d=d, N=N, counts=tuple(rows), coeffs=instance.coeffs)


def bruteforce_histogram(k: int, d: int, N: int, coeffs: Optional[Sequence[int]] = None,
                         guard: int = ENUMERATION_GUARD) -> np.ndarray:
    """Counts of sum c_i n_i^k = n for every n <= N by enumerating tuples.

    Partial sums already above N are dropped as the enumeration proceeds.
    """
    weights = tuple(coeffs) if coeffs is not None else (1,) * d
    ranges = [iroot(N // c, k) for c in weights]
    if any(r == 0 for r in ranges):
        return np.zeros(N + 1, dtype=np.int64)
    total = math.prod(ranges)
    if total > guard:
        raise CapacityError(f"enumeration of {total} tuples exceeds guard {guard}")
    sums = np.zeros(1, dtype=np.int64)
    for c, X in zip(weights, ranges):
        terms = c * np.arange(1, X + 1, dtype=np.int64) ** k
        sums = np.add.outer(sums, terms).ravel()
        sums = sums[sums <= N]
    return np.bincount(sums, minlength=N + 1)


def count_bruteforce(instance: WaringInstance, guard: int = ENUMERATION_GUARD) -> int:
    hist = bruteforce_histogram(instance.k, instance.d, instance.N, instance.coeffs, guard)
    return int(hist[instance.N])


def ball_volume_log(k: int, d: int, N: int) -> float:
    """log of the Lebesgue measure of {x : sum |x_j|^k <= N}."""
    return (d * math.log(2.0 * math.gamma(1.0 + 1.0 / k))
            - math.lgamma(1.0 + d / k) + (d / k) * math.log(N))


def ball_count(k: int, d: int, N: int, budget: Optional[int] = None) -> BallCount:
    """Integer points of the k-ball of radius N^(1/k) in dimension d."""
    WaringInstance(k, d, N)
    _check_budget(d, N, budget)
    weights = [0] * (N + 1)
    weights[0] = 1
    for m in range(1, iroot(N, k) + 1):
        weights[m**k] = 2
    shells = _poly.power(weights, d, N + 1)
    log_vol = ball_volume_log(k, d, N)
    return BallCount(k=k, d=d, N=N, latticeCount=sum(shells),
                     volume=math.exp(log_vol), log_volume=log_vol)
