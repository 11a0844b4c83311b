import itertools
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from waring import core
from waring.core import WaringInstance, ball_count, count_bruteforce, count_exact
from waring.errors import CapacityError


def brute_ball(k, d, N):
    X = core.iroot(N, k)
    rng = range(-X, X + 1)
    return sum(1 for x in itertools.product(rng, repeat=d) if sum(abs(v) ** k for v in x) <= N)


@pytest.mark.parametrize("k,d,N,expected", [
    (2, 2, 5, 2),
    (3, 4, 4, 1),
    (3, 7, 7, 1),
    (2, 2, 25, 2),
])
def test_count_exact_examples(k, d, N, expected):
    assert count_exact(WaringInstance(k, d, N)).count == expected


@pytest.mark.parametrize("k,d,N,expected", [(2, 3, 3, 1), (2, 4, 4, 1), (3, 2, 9, 2)])
def test_count_bruteforce_examples(k, d, N, expected):
    assert count_bruteforce(WaringInstance(k, d, N)) == expected


@pytest.mark.parametrize("bad", [
    dict(k=1, d=2, N=5), dict(k=2, d=0, N=5), dict(k=2, d=2, N=0),
    dict(k=2, d=2, N=5, coeffs=(2, 4)), dict(k=2, d=2, N=5, coeffs=(1,)),
    dict(k=2, d=2, N=5, coeffs=(0, 1)),
])
def test_instance_validation(bad):
    with pytest.raises(ValueError):
        WaringInstance(**bad)


def test_instance_X_exact_powers():
    assert WaringInstance(2, 3, 10**12).X == 10**6
    assert WaringInstance(3, 3, 10**12 - 1).X == 9999
    assert WaringInstance(3, 3, 125).X == 5


def test_ladder_invariants():
    table = count_exact(WaringInstance(2, 5, 300))
    one = table.row(1)
    assert set(one) <= {0, 1}
    for j in range(1, 5):
        row, nxt = table.row(j), table.row(j + 1)
        for n in range(301):
            assert nxt[n] == sum(row[n - m] * one[m] for m in range(n + 1))
    for j in range(1, 6):
        assert all(table(j, n) == 0 for n in range(j))


def test_small_N_is_zero_not_error():
    assert count_exact(WaringInstance(2, 5, 3)).count == 0


def test_kronecker_path_matches_schoolbook():
    inst = WaringInstance(2, 6, 3000)
    assert count_exact(inst, threshold=0).counts == count_exact(inst, threshold=10**12).counts


def test_big_counts_are_exact_integers():
    table = count_exact(WaringInstance(2, 40, 2000))
    assert isinstance(table.count, int)
    assert table.count > 2**64


def test_capacity_error():
    with pytest.raises(CapacityError):
        count_exact(WaringInstance(2, 10, 10**6), budget=10**6)
    with pytest.raises(CapacityError):
        count_bruteforce(WaringInstance(2, 10, 10**4), guard=10**6)


def test_json_roundtrip_big_ints_as_strings():
    table = count_exact(WaringInstance(2, 2, 25))
    payload = json.loads(table.to_json())
    assert payload["counts"][0][25] == "2"
    assert len(payload["counts"]) == 1
    full = json.loads(table.to_json(all_rows=True))
    assert len(full["counts"]) == 2
    weighted = json.loads(count_exact(WaringInstance(2, 2, 9, (1, 2))).to_json())
    assert weighted["coeffs"] == [1, 2]


@given(st.permutations([1, 2, 3, 5]), st.integers(20, 150))
@settings(max_examples=30, deadline=None)
def test_coefficient_permutation_symmetry(perm, N):
    a = count_exact(WaringInstance(2, 4, N, (1, 2, 3, 5))).count
    assert count_exact(WaringInstance(2, 4, N, tuple(perm))).count == a


@given(st.integers(2, 4), st.integers(1, 4), st.integers(1, 120))
@settings(max_examples=60, deadline=None)
def test_exact_equals_bruteforce_property(k, d, N):
    inst = WaringInstance(k, d, N)
    assert count_exact(inst).count == count_bruteforce(inst)


@pytest.mark.parametrize("k,d,N,expected", [(2, 1, 4, 5), (2, 2, 1, 5), (2, 2, 25, 81)])
def test_ball_examples(k, d, N, expected):
    assert ball_count(k, d, N).latticeCount == expected


@pytest.mark.parametrize("k,d,N", [(2, 3, 30), (3, 3, 70), (2, 4, 12), (4, 2, 100)])
def test_ball_matches_enumeration(k, d, N):
    assert ball_count(k, d, N).latticeCount == brute_ball(k, d, N)


def test_ball_volume_closed_form():
    b = ball_count(2, 2, 100)
    assert b.volume == pytest.approx(math.pi * 100, rel=1e-13)
    b3 = ball_count(2, 3, 64)
    assert b3.volume == pytest.approx(4 / 3 * math.pi * 512, rel=1e-13)
    assert b.ratio == pytest.approx(b.latticeCount / b.volume, rel=1e-13)
