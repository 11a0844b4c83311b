"""Exact products of polynomials with nonnegative integer coefficients.

Two kernels are provided: a schoolbook loop for sparse/small operands and a
Kronecker-substitution path that packs coefficients into one big integer and
lets GMP do the multiplication.  Both return plain Python ints.
"""
from __future__ import annotations

from typing import Sequence

try:
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpz = int

#: work (len(a) * nnz(b)) above which the packed path is used
KRONECKER_THRESHOLD = 200_000


def _pack(coeffs: Sequence[int], nbytes: int) -> int:
    blob = b"".join(int(c).to_bytes(nbytes, "little") for c in coeffs)
    return int.from_bytes(blob, "little")


def _unpack(value: int, nbytes: int, length: int) -> list[int]:
    value = int(value)
    raw = value.to_bytes(max((value.bit_length() + 7) // 8, 1), "little")
    raw = raw[:length * nbytes].ljust(length * nbytes, b"\0")
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") for i in range(length)]


def _slot_bytes(a: Sequence[int], b: Sequence[int]) -> int:
    bound = sum(a) * sum(b)
    return max(1, (bound.bit_length() + 8) // 8)


def mul_schoolbook(a: Sequence[int], b: Sequence[int], length: int) -> list[int]:
    out = [0] * length
    support = [(m, c) for m, c in enumerate(b) if c and m < length]
    for m, c in support:
        hi = min(len(a), length - m)
        if c == 1:
            for n in range(hi):
                out[n + m] += a[n]
        else:
            for n in range(hi):
                out[n + m] += c * a[n]
    return out


def mul_kronecker(a: Sequence[int], b: Sequence[int], length: int) -> list[int]:
    a = list(a[:length])
    b = list(b[:length])
    if not a or not b:
        return [0] * length
    nbytes = _slot_bytes(a, b)
    prod = _mpz(_pack(a, nbytes)) * _mpz(_pack(b, nbytes))
    full = len(a) + len(b) - 1
    out = _unpack(prod, nbytes, min(full, length))
    out.extend([0] * (length - len(out)))
    return out


def multiply(a: Sequence[int], b: Sequence[int], length: int,
             threshold: int = KRONECKER_THRESHOLD) -> list[int]:
    """Coefficients 0..length-1 of a*b."""
    nnz = sum(1 for c in b if c)
    if len(a) * nnz <= threshold:
        return mul_schoolbook(a, b, length)
    return mul_kronecker(a, b, length)


def power(base: Sequence[int], exponent: int, length: int,
          threshold: int = KRONECKER_THRESHOLD) -> list[int]:
    """Coefficients 0..length-1 of base**exponent (exponent >= 1)."""
    if exponent < 1:
        raise ValueError("exponent must be >= 1")
    result = None
    sq = list(base[:length]) + [0] * max(0, length - len(base))
    e = exponent
    while True:
        if e & 1:
            result = sq if result is None else multiply(result, sq, length, threshold)
        e >>= 1
        if not e:
            return result
        sq = multiply(sq, sq, length, threshold)


def cyclic_multiply(a: Sequence[int], b: Sequence[int], modulus: int) -> list[int]:
    """Exact cyclic convolution of two length-``modulus`` vectors."""
    full = mul_kronecker(a, b, 2 * modulus - 1) if modulus > 64 else mul_schoolbook(a, b, 2 * modulus - 1)
    out = full[:modulus]
    for i, c in enumerate(full[modulus:]):
        out[i] += c
    return out


def cyclic_power(base: Sequence[int], exponent: int, modulus: int) -> list[int]:
    result = None
    sq = list(base)
    e = exponent
    while True:
        if e & 1:
            result = sq if result is None else cyclic_multiply(result, sq, modulus)
        e >>= 1
        if not e:
            return result
        sq = cyclic_multiply(sq, sq, modulus)
