import cmath
import csv
import io
import itertools
import json
import math
import random
import warnings

import pytest
from hypothesis import given, settings, strategies as st
from sympy import totient

from waring import singular
from waring.errors import StabilizationError
from waring.singular import (arc_sum, euler_product, local_density, multiplicativity_check,
                             truncated_series)


def direct_arc_sum(k, d, N, q, coeffs=None):
    coeffs = coeffs or (1,) * d
    total = 0j
    for a in range(1, q + 1):
        if math.gcd(a, q) != 1:
            continue
        term = 1
        for c in coeffs:
            term *= sum(cmath.exp(2j * math.pi * ((c * a * r**k) % q) / q) for r in range(1, q + 1)) / q
        total += term * cmath.exp(-2j * math.pi * ((N * a) % q) / q)
    return total


def brute_density(k, d, N, p, h):
    L = p**h
    hits = sum(1 for x in itertools.product(range(L), repeat=d) if (sum(v**k for v in x) - N) % L == 0)
    return hits / L ** (d - 1)


def test_arc_sum_examples():
    assert arc_sum(2, 5, 17, 1).value == 1.0
    assert abs(arc_sum(2, 4, 1, 2).value) < 1e-15
    ref = direct_arc_sum(2, 5, 4, 4)
    assert abs(arc_sum(2, 5, 4, 4).value - ref.real) < 1e-12
    assert abs(ref.imag) < 1e-12


@given(st.integers(2, 4), st.integers(2, 12), st.integers(1, 500), st.integers(1, 60))
@settings(max_examples=80, deadline=None)
def test_arc_sum_real_bounded_periodic(k, d, N, q):
    s = arc_sum(k, d, N, q)
    assert abs(s.imag_residual) <= 1e-9
    assert abs(s.value) <= int(totient(q)) + 1e-9
    assert arc_sum(k, d, N + q, q).value == s.value
    assert abs(s.value - direct_arc_sum(k, d, N, q).real) < 1e-10


def test_arc_sum_generalized_matches_direct():
    c = (1, 2, 3, 1, 1)
    for q in (5, 8, 9, 12):
        assert abs(arc_sum(2, 5, 11, q, c).value - direct_arc_sum(2, 5, 11, q, c).real) < 1e-12


def test_truncated_series_examples():
    assert truncated_series(2, 5, 9, 1).value == 1.0
    ts = truncated_series(2, 5, 5, 400)
    assert ts.value > 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ep = euler_product(2, 5, 5, P=50)
    assert abs(ts.value - ep.eulerProduct) < 1e-3
    assert len(ts.partial_sums) == 400 and ts.partial_sums[-1] == pytest.approx(ts.value)


def test_truncated_series_tail_decreases():
    ts = truncated_series(2, 9, 37, 1600)
    p = ts.partial_sums
    gaps = [abs(p[2 * Q - 1] - p[Q - 1]) for Q in (25, 50, 100, 200, 400, 800)]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))


def test_decay_constant_dominates_terms():
    ts = truncated_series(2, 9, 30, 300)
    q = range(2, 301)
    assert all(abs(ts.terms[i - 1]) <= ts.decay_constant * i ** -1.1 * (1 + 1e-12) for i in q)


def test_local_density_dual_forms():
    ld = local_density(2, 5, 1, 3, tol=1e-9)
    assert ld.stabilized
    assert abs(ld.value - ld.congruence_value) < 1e-9
    assert ld.value > 0


@pytest.mark.parametrize("k,d,N,p,h", [(2, 3, 5, 2, 3), (2, 4, 7, 3, 2), (3, 3, 4, 2, 3)])
def test_congruence_density_bruteforce(k, d, N, p, h):
    assert float(singular.congruence_density(k, d, N, p, h)) == pytest.approx(
        brute_density(k, d, N, p, h), rel=1e-15)


def test_congruence_equals_arc_partial_sum():
    # p^{h(1-d)} #solutions mod p^h equals sum_{j <= h} A_N(p^j)
    for p, h in [(2, 4), (3, 3), (5, 2)]:
        partial = sum(arc_sum(2, 5, 13, p**j).value for j in range(h + 1))
        assert float(singular.congruence_density(2, 5, 13, p, h)) == pytest.approx(partial, abs=1e-12)


def test_local_density_tends_to_one():
    devs = [abs(local_density(2, 5, 6, p).value - 1) for p in (11, 31, 61, 101)]
    assert all(dev <= 20 * p ** -1.1 for dev, p in zip(devs, (11, 31, 61, 101)))
    assert devs[-1] < devs[0]


def test_local_density_errors():
    with pytest.raises(ValueError):
        local_density(2, 5, 1, 4)
    with pytest.raises(ValueError):
        local_density(2, 1, 1, 3)
    with pytest.raises(StabilizationError) as info:
        local_density(2, 5, 3, 2, tol=1e-9, max_height=2)
    assert info.value.diagnostics["p"] == 2


def test_euler_product_single_prime():
    res = euler_product(2, 9, 10, P=2)
    assert len(res.perPrime) == 1 and res.perPrime[0].p == 2
    assert res.eulerProduct == res.perPrime[0].value


@pytest.mark.parametrize("N", [1, 7, 23, 50])
def test_euler_product_dual_form_d9(N):
    res = euler_product(2, 9, N, P=50, Q=1000)
    assert res.discrepancy <= 1e-3
    assert res.discrepancy <= res.tailEstimate
    assert res.eulerProduct > 0


def test_positivity_and_warning():
    with pytest.warns(UserWarning):
        res = euler_product(2, 4, 7, P=20, Q=50)
    assert "d_below_2^k+1" in res.flags
    values = [euler_product(3, 9, N, P=30, Q=200).value for N in range(1, 40, 3)]
    assert min(values) > 0


def test_euler_product_serialization():
    res = euler_product(2, 9, 20, P=13, Q=100)
    payload = json.loads(res.to_json())
    assert payload["P"] == 13 and [f["p"] for f in payload["perPrime"]] == [2, 3, 5, 7, 11, 13]
    row = next(csv.DictReader(io.StringIO(res.to_csv())))
    assert list(row) == list(singular.SingularSeriesResult.CSV_FIELDS)
    assert float(row["eulerProduct"]) == res.eulerProduct


def test_generalized_plain_coefficients_identical():
    a = euler_product(2, 9, 33, P=20, Q=200)
    b = euler_product(2, 9, 33, P=20, Q=200, coeffs=(1,) * 9)
    assert a.eulerProduct == b.eulerProduct and a.truncatedSum == b.truncatedSum


def test_multiplicativity_examples():
    rep = multiplicativity_check(2, 5, 7, [(3, 4), (1, 9), (5, 1)], tol=1e-10)
    assert rep.passed
    rng = random.Random(0)
    pairs = []
    while len(pairs) < 50:
        q1, q2 = rng.randint(1, 100), rng.randint(1, 100)
        if math.gcd(q1, q2) == 1:
            pairs.append((q1, q2))
    assert multiplicativity_check(2, 5, 7, pairs).passed
    with pytest.raises(ValueError):
        multiplicativity_check(2, 5, 7, [(2, 4)])
