import csv
import io
import json
import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import simpson

from waring import asymptotic
from waring.arcs import build_arcs
from waring.asymptotic import (approx_A1, approx_A2, approx_A3, main_term, scan,
                               singular_integral_check, verify)
from waring.core import WaringInstance, count_exact, iroot
from waring.expsums import v_integral
from waring.singular import euler_product, truncated_series


def test_main_term_examples():
    assert main_term(2, 2, 17).value == pytest.approx(math.pi / 4, rel=1e-15)
    assert main_term(2, 4, 100).value == pytest.approx(math.pi**2 * 100 / 16, rel=1e-14)
    assert main_term(3, 5, 77, (1,) * 5).value == main_term(3, 5, 77).value


@pytest.mark.parametrize("k,d,N", [(2, 9, 1000), (3, 16, 12345), (5, 40, 10**9), (7, 3, 2)])
def test_log_main_term_against_mpmath(k, d, N):
    mpmath.mp.dps = 40
    ref = (d * mpmath.loggamma(1 + mpmath.mpf(1) / k) - mpmath.loggamma(mpmath.mpf(d) / k)
           + (mpmath.mpf(d) / k - 1) * mpmath.log(N))
    assert main_term(k, d, N).logValue == pytest.approx(float(ref), rel=1e-13, abs=1e-13)


def test_main_term_generalized_prefactor():
    c = (1, 2, 3)
    assert main_term(2, 3, 50, c).value == pytest.approx(
        main_term(2, 3, 50).value / 6 ** 0.5, rel=1e-14)


def test_main_term_overflow_keeps_log():
    mt = main_term(2, 4000, 10**6)
    assert mt.overflow and math.isfinite(mt.logValue)


@pytest.mark.parametrize("k,d,N", [(2, 4, 25), (2, 3, 9)])
def test_singular_integral_examples(k, d, N):
    res = asymptotic.singular_integral(k, d, N)
    assert res.deviation <= 1e-3
    assert abs(res.value.imag) <= 1e-9
    assert singular_integral_check(k, d, N) == res.deviation


def test_singular_integral_requires_d_gt_k():
    with pytest.raises(ValueError):
        singular_integral_check(2, 2, 25)


def test_A1_single_arc_against_riemann():
    k, d, N = 2, 5, 16
    X = iroot(N, k)
    dec = build_arcs(k, X, 0.25)
    assert dec.Q == 1
    w = dec.halfWidth
    theta = np.linspace(-w, w, 4001)
    vals = np.array([v_integral(k, X, t, tol=1e-12) ** d for t in theta]) * np.exp(-2j * np.pi * theta * N)
    ref = simpson(vals.real, x=theta)
    assert approx_A1(k, d, N, 0.25).value == pytest.approx(ref, rel=1e-8)


def test_A1_moves_toward_A2_as_alpha_grows():
    k, d, N = 2, 6, 400
    gaps = []
    for alpha in (0.05, 0.15, 0.3):
        X = iroot(N, k)
        Q = build_arcs(k, X, alpha).Q
        J = approx_A1(k, d, N, alpha).value / truncated_series(k, d, N, Q).value
        gaps.append(abs(J - main_term(k, d, N).value))
    assert gaps[0] > gaps[1] > gaps[2]


def test_A2_examples():
    assert approx_A2(2, 5, 15, 0.25) == main_term(2, 5, 15).value
    X = iroot(100, 2)
    Q = build_arcs(2, X, 0.25).Q
    assert approx_A2(2, 5, 100, 0.25) == pytest.approx(
        truncated_series(2, 5, 100, Q).value * main_term(2, 5, 100).value, rel=1e-12)
    N = 6561  # X = 81, Q = 3
    assert approx_A2(2, 9, N, 0.25) == pytest.approx(
        truncated_series(2, 9, N, 3).value * main_term(2, 9, N).value, rel=1e-12)


def test_A3_examples():
    assert approx_A3(2, 9, 200) > 0
    a = approx_A3(2, 9, 120, P=20, Q=100)
    b = approx_A3(2, 9, 120, P=20, Q=100, coeffs=(1,) * 9)
    assert a == b


def test_verify_small_example():
    rec = verify(WaringInstance(2, 2, 5))
    assert rec.exactCount == 2
    assert abs(rec.Mk + rec.mk - 2) < 1e-10


def test_verify_k3_d16_invariants():
    inst = WaringInstance(3, 16, 1000)
    rec = verify(inst)
    assert rec.exactCount == count_exact(inst).count
    assert abs(rec.Mk + rec.mk - rec.exactCount) <= 1e-8 * rec.exactCount
    Q = build_arcs(3, inst.X, 0.25).Q
    assert rec.A2 == pytest.approx(truncated_series(3, 16, 1000, Q).value * rec.mainTerm, rel=1e-12)
    assert rec.A3 == pytest.approx(rec.singularSeries * rec.mainTerm, rel=1e-15)
    assert rec.ratio > 0
    assert "minor_arc_crosscheck_failed" not in rec.flags
    assert "N<d^3" in rec.flags


def test_verify_generalized_instance():
    inst = WaringInstance(2, 9, 300, (1, 2) + (1,) * 7)
    rec = verify(inst)
    assert "cascade_plain_only" in rec.flags
    assert rec.exactCount == count_exact(inst).count
    assert rec.to_dict()["coeffs"] == list(inst.coeffs)


def test_record_csv_schema():
    rec = verify(WaringInstance(2, 9, 200))
    text = asymptotic.records_to_csv([rec])
    header = text.splitlines()[0]
    assert header == ("k,d,N,alpha,exactCount,mainTerm,singularSeries,Mk,mk,A1,A2,A3,"
                      "ratio,delta1,delta2,delta3,flags")
    row = next(csv.DictReader(io.StringIO(text)))
    assert int(row["exactCount"]) == rec.exactCount
    assert float(row["ratio"]) == rec.ratio
    payload = json.loads(asymptotic.records_to_json([rec]))
    assert payload[0]["exactCount"] == str(rec.exactCount)


def test_scan_edge_cases(monkeypatch):
    assert len(scan(2, 9, [])) == 0
    single = scan(2, 9, [300])
    assert single.to_csv() == asymptotic.records_to_csv([verify(WaringInstance(2, 9, 300))])
    with pytest.raises(ValueError):
        scan(2, 9, [400, 300])
    bad = scan(2, 9, [1, 300])
    assert len(bad) == 1 and bad.errors[0][0] == 1


def test_scan_thread_count_invariance(monkeypatch):
    grid = [200, 300, 400, 500]
    monkeypatch.setenv("WARING_THREADS", "1")
    one = scan(2, 9, grid).to_csv()
    monkeypatch.setenv("WARING_THREADS", "4")
    assert scan(2, 9, grid).to_csv() == one
    monkeypatch.setenv("WARING_THREADS", "x")
    with pytest.raises(ValueError):
        asymptotic.worker_count()
