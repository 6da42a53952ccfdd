import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from rmtlab.bounds import (
    LIMIT,
    BoundConstants,
    bernstein_tail,
    epsilon_for_eta,
    epsilon_residual,
    find_threshold,
    lemma31_condition,
    lemma31_threshold,
    lemma36_condition,
    lemma36_log_terms,
    lemma36_threshold,
    lemma36_thresholds,
    log_net_cardinality,
    prop41_threshold,
    theorem42_certificate,
    theorem42_condition,
)
from rmtlab.errors import InvalidParams
from rmtlab.matrix import drop_count

ONES = BoundConstants()

# Pinned by the scan oracle in test_lemma36_threshold_scan_oracle and the
# composition checks below (all constants 1, eta = 1, M = 1).
N36_EPS1 = 5224
CERT_EPS41 = 0.015736011828817797
CERT_N41 = 64
CERT_N36 = 67259324
CERT_N31 = 856
CERT_N38 = 67259325
CERT_N42 = 67259326


def test_bernstein_examples():
    assert bernstein_tail(0.0, 1.0, 1.0) == 2.0
    assert bernstein_tail(1.0, 1.0, math.log(2)) == pytest.approx(1.0, abs=1e-15)
    for tau, M, c in [(0.3, 1.0, 0.5), (2.0, 3.0, 1.2), (1.0, 0.5, 0.1)]:
        b = bernstein_tail(tau, M, c)
        assert bernstein_tail(tau, M / 2, c) == pytest.approx(2 * (b / 2) ** 4, rel=1e-12)


def test_net_cardinalities():
    assert log_net_cardinality("ball", n=1, eps=1.0) == pytest.approx(math.log(3))
    assert log_net_cardinality("sparse", N=100) == pytest.approx(10 * math.log(1200 * math.e))
    vals = [log_net_cardinality("ball", n=n, eps=0.1) for n in (1, 2, 3)]
    assert vals[1] - vals[0] == pytest.approx(vals[2] - vals[1], rel=1e-15)
    assert vals[0] == pytest.approx(math.log(30))
    assert log_net_cardinality("cube-net", n=7, C=2.0) == 14.0
    for bad in [("ball", dict(n=0, eps=0.5)), ("ball", dict(n=1, eps=1.5)), ("sparse", dict(N=0)), ("x", {})]:
        with pytest.raises(InvalidParams):
            log_net_cardinality(bad[0], **bad[1])


def _lambert_oracle(eta, M, c):
    L = c * eta * eta / (2 * M * M)
    K = 2 + math.log(6)
    if 1 * (K - 0.0) <= L:
        return 1.0
    # eps (K - ln eps) = L  <=>  v - ln v = K - ln L with eps = L / v
    v = -special.lambertw(-math.exp(-(K - math.log(L))), -1).real
    return L / v


def test_epsilon_cap():
    assert epsilon_for_eta(1e6, 1.0, 1.0) == 1.0


def test_epsilon_fixture_case():
    eps = epsilon_for_eta(0.5, 1.0, 0.5)
    lhs = 0.0625
    assert abs(lhs - eps * (1 + math.log(6 * math.e / eps))) <= 1e-12 * lhs
    assert eps == pytest.approx(_lambert_oracle(0.5, 1.0, 0.5), rel=1e-12)


@given(st.floats(1e-3, 10.0), st.floats(0.1, 100.0), st.floats(0.01, 10.0))
def test_epsilon_against_lambert_w(eta, M, c):
    eps = epsilon_for_eta(eta, M, c)
    assert 0 < eps <= 1
    assert epsilon_residual(eps, eta, M, c) >= -1e-12 * c * eta * eta / (2 * M * M)
    if eps < 1:
        lhs = c * eta * eta / (2 * M * M)
        assert abs(epsilon_residual(eps, eta, M, c)) <= 1e-12 * lhs
        assert epsilon_residual(1.01 * eps, eta, M, c) < 0
        assert eps == pytest.approx(_lambert_oracle(eta, M, c), rel=1e-11)


def test_epsilon_monotone():
    e = [epsilon_for_eta(eta, 2.0, 1.0) for eta in (0.1, 0.5, 2.0)]
    assert e[0] <= e[1] <= e[2]
    e = [epsilon_for_eta(0.5, M, 1.0) for M in (0.5, 1.0, 4.0)]
    assert e[0] >= e[1] >= e[2]


def test_epsilon_bad_params():
    for args in [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)]:
        with pytest.raises(InvalidParams):
            epsilon_for_eta(*args)


def test_constants_must_be_positive():
    with pytest.raises(InvalidParams):
        BoundConstants(c_31=0.0)
    with pytest.raises(InvalidParams):
        BoundConstants(extra={"C_38": -1.0})
    assert ONES.illustrative and not BoundConstants(c_31=2.0).illustrative


# --- thresholds -------------------------------------------------------------------


def _scan_condition36(N, eps, c31=1.0, C=1.0):
    N = N.astype(np.float64)
    a = np.sqrt(N) * np.log(12 * math.e * N) - c31 * eps * N / 3
    lhs = np.logaddexp(np.logaddexp(a, -C * N), -N)
    return lhs <= -min(c31 * eps / 6, C / 2, 0.5) * N


def _last_failure(cond, upper, chunk=10**7):
    last = 0
    for lo in range(1, upper + 1, chunk):
        N = np.arange(lo, min(upper, lo + chunk - 1) + 1)
        bad = np.flatnonzero(~cond(N))
        if bad.size:
            last = int(N[bad[-1]])
    return last


def test_lemma36_threshold_scan_oracle():
    T = lemma36_threshold(1.0, ONES)
    assert T.value == N36_EPS1
    last = _last_failure(lambda N: _scan_condition36(N, 1.0), 10**7)
    assert last + 1 == N36_EPS1
    # geometric extension past the linear scan
    pts = np.unique(np.geomspace(10**7, 2**62, 2000).astype(np.int64))
    assert np.all(_scan_condition36(pts, 1.0))


def test_lemma36_threshold_minimality():
    for eps in (1.0, 0.5, 0.1):
        T = lemma36_threshold(eps, ONES).value
        assert lemma36_condition(T, eps, ONES)
        assert not lemma36_condition(T - 1, eps, ONES)


def test_lemma36_nonincreasing_in_c31():
    a = lemma36_threshold(0.5, BoundConstants(c_31=1.0)).value
    b = lemma36_threshold(0.5, BoundConstants(c_31=2.0)).value
    assert b <= a


def test_lemma36_overflow_and_finite_logs():
    assert lemma36_threshold(1e-12, ONES).value is None
    for N in (1, 2**31, 2**62):
        lhs, rhs = lemma36_log_terms(N, 1e-12, ONES)
        assert math.isfinite(lhs) and math.isfinite(rhs)
        assert math.isfinite(log_net_cardinality("sparse", N=N))


def test_lemma36_thresholds_with_distribution_inputs():
    ths = lemma36_thresholds(1.0, ONES, delta_34=0.3, n_35=9000)
    by = {t.label: t for t in ths}
    assert by["N_3.6[cond1]"].value == 4**4  # ceil(1/0.3)^4
    assert by["N_3.6[cond1]"].distribution_dependent
    assert by["N_3.6"].value == max(N36_EPS1, 256, 9000, by["N_3.1(eps/3)"].value)
    plain = {t.label: t for t in lemma36_thresholds(1.0, ONES)}
    assert plain["N_3.6"].distribution_dependent and "lower bound" in plain["N_3.6"].note


def test_lemma31_threshold():
    for eps in (1.0, 1 / 3, 0.05):
        T = lemma31_threshold(eps).value
        assert lemma31_condition(T, eps) and not lemma31_condition(T - 1, eps)
        N = np.arange(T, T + 20000)
        x = eps * N
        assert np.all(np.logaddexp(x * math.log(math.e / 4), -x * math.e / 4) <= -x / 3)


@given(st.floats(1e-4, 1.0))
def test_prop41_threshold_is_ceil_inverse(eps):
    T = prop41_threshold(eps).value
    assert T == math.ceil(1 / eps) or eps * T >= 1 > eps * (T - 1) - 1e-12
    assert drop_count(eps, T) >= eps * T / 2


def test_find_threshold_skips_false_crossings():
    # holds at 5..9 and from 100 on; the tail check must reject the early block
    cond = lambda N: 5 <= N < 10 or N >= 100  # noqa: E731
    assert find_threshold(cond) == 100
    assert find_threshold(lambda N: N >= 1) == 1
    assert find_threshold(lambda N: False) is None
    assert find_threshold(lambda N: N >= LIMIT) == LIMIT


# --- certificate ------------------------------------------------------------------


def test_certificate_fixture():
    cert = theorem42_certificate(1.0, 1.0, ONES)
    assert cert.epsilon_41 == CERT_EPS41
    assert cert.epsilon_41 == epsilon_for_eta(1.0, 2.0, 1.0)
    got = {t.label: t.value for t in cert.thresholds}
    assert got["N_4.1"] == CERT_N41
    assert got["N_3.6[cond3]"] == CERT_N36
    assert got["N_3.1(eps/3)"] == CERT_N31
    assert got["N_3.8"] == CERT_N38
    assert got["N_4.2"] == CERT_N42
    assert cert.w_42 == min(cert.epsilon_41 / 2, cert.w_38 / 2)
    assert abs(cert.residual_41) <= 1e-12


def test_certificate_n36_scan_oracle():
    last = _last_failure(lambda N: _scan_condition36(N, CERT_EPS41), 10**8)
    assert last + 1 == CERT_N36
    pts = np.unique(np.geomspace(10**8, 2**62, 2000).astype(np.int64))
    assert np.all(_scan_condition36(pts, CERT_EPS41))


def test_certificate_thresholds_are_minimal():
    cert = theorem42_certificate(1.0, 1.0, ONES)
    eps = cert.epsilon_41
    n36 = cert.threshold("N_3.6[cond3]").value
    assert lemma36_condition(n36, eps, ONES) and not lemma36_condition(n36 - 1, eps, ONES)
    n38 = cert.threshold("N_3.8").value
    assert n38 > cert.threshold("N_3.6").value and cert.w_36 * n38 / 2 >= math.log(4 / 3)
    n42 = cert.threshold("N_4.2").value
    floor_n = max(cert.threshold("N_4.1").value, n38)
    assert theorem42_condition(n42, floor_n, eps, cert.w_38)
    assert not theorem42_condition(n42 - 1, floor_n, eps, cert.w_38)


def test_certificate_monotone_in_eta():
    a = theorem42_certificate(0.5, 1.0, ONES).epsilon_41
    b = theorem42_certificate(1.0, 1.0, ONES).epsilon_41
    assert a <= b


def test_certificate_serialization():
    cert = theorem42_certificate(1.0, 1.0, ONES, delta_34=0.2, n_35=100)
    data = json.loads(json.dumps(cert.to_json()))
    assert set(data) == {
        "inputs", "epsilon_41", "residuals", "w", "thresholds", "log_cardinalities", "constants_illustrative", "log"
    }  # fmt: skip
    assert data["inputs"]["eta"] == 1.0 and data["inputs"]["constants"]["c_31"] == 1.0
    assert all(t["distribution_dependent"] for t in data["thresholds"] if t["label"] in ("N_3.8", "N_4.2"))
    text = cert.to_text()
    assert "epsilon_41" in text and "illustrative" in text
    assert all(math.isfinite(c["value"]) for c in data["log_cardinalities"])


def test_certificate_overflow_reported():
    cert = theorem42_certificate(1e-7, 1.0, ONES)
    data = cert.to_json()
    assert any(t["value"] == "overflow" for t in data["thresholds"])
    assert "overflow" in cert.to_text()
