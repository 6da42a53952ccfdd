import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtlab.distributions import parse_spec
from rmtlab.errors import DimensionError, InvalidParams
from rmtlab.matrix import row_projection, sample_matrix
from rmtlab.spectral import (
    EsdCurve,
    esd,
    jacobi_eigh,
    ks_distance,
    mp_cdf,
    mp_cdf_array,
    mp_edges,
    singular_values,
    write_esd_csv,
)

GAUSS = parse_spec("gaussian")

# F_MP(1) at z = 1/4 from mpmath tanh-sinh quadrature of the raw density
# at 30 digits (see test_mp_cdf_pinned_value)
MP_AT_1_Z025 = 0.553390081275336099


def _mp_oracle(t, z, dps=25):
    with mp.workdps(dps):
        z = mp.mpf(z)
        r, R = (1 - mp.sqrt(z)) ** 2, (1 + mp.sqrt(z)) ** 2
        t = mp.mpf(t)
        if t <= r:
            return 0.0
        if t >= R:
            return 1.0
        val = mp.quad(lambda x: mp.sqrt((R - x) * (x - r)) / x, [r, t]) / (2 * mp.pi * z)
        return float(val)


def test_singular_values_examples():
    assert np.allclose(singular_values(np.eye(2)).singular_values, [1.0, 1.0], atol=1e-15)
    s = singular_values(np.array([[1.0], [1.0]]))
    assert s.singular_values.tolist() == pytest.approx([math.sqrt(2)], abs=1e-15)


@pytest.mark.parametrize("method", ["gram", "svd", "jacobi"])
def test_summary_fields(method):
    A = sample_matrix(GAUSS, 30, 10, 1)
    s = singular_values(A, method)
    sv = s.singular_values
    assert sv.size == 10 and np.all(np.diff(sv) <= 0) and np.all(sv >= 0)
    assert s.s1 == sv[0] and s.sm == sv[-1]
    assert s.scaled_sm == s.sm / math.sqrt(30) and s.scaled_s1 == s.s1 / math.sqrt(30)
    assert s.max_residual <= 1e-10


def _grid_smallest(a, n=10_000):
    th = np.linspace(0, np.pi, n, endpoint=False)
    Y = np.stack([np.cos(th), np.sin(th)])
    return np.min(np.linalg.norm(a @ Y, axis=0))


def test_smallest_singular_value_against_angular_grid():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.standard_normal((4, 2))
        assert abs(singular_values(a).sm - _grid_smallest(a)) <= 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_routes_agree(seed):
    a = sample_matrix(parse_spec("student-t:nu=3.0"), 50, 20, seed).entries
    g = singular_values(a, "gram").singular_values
    d = singular_values(a, "svd").singular_values
    j = singular_values(a, "jacobi").singular_values
    assert np.max(np.abs(g - d) / d[0]) <= 1e-9
    assert np.max(np.abs(j - d) / d[0]) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_jacobi_eigenpairs(n, seed):
    r = np.random.default_rng(seed)
    B = r.standard_normal((n, n))
    G = B + B.T
    w, V = jacobi_eigh(G)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(V.T @ V, np.eye(n), atol=1e-12)
    assert np.linalg.norm(G @ V - V * w) <= 1e-12 * max(1.0, np.linalg.norm(G))
    assert np.allclose(w, np.linalg.eigvalsh(G), atol=1e-12 * max(1.0, np.abs(w).max()))


def test_dimension_error():
    with pytest.raises(DimensionError):
        singular_values(np.ones((2, 3)))
    with pytest.raises(InvalidParams):
        singular_values(np.ones((3, 2)), method="lanczos")


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_projection_cannot_raise_smallest_singular_value(seed):
    A = sample_matrix(GAUSS, 15, 4, seed)
    I = np.flatnonzero(np.random.default_rng(seed % 2**32).random(15) < 0.7)
    assert singular_values(row_projection(A, I)).sm <= singular_values(A).sm + 1e-12


# --- ESD ------------------------------------------------------------------------


def test_esd_identity():
    curve = esd(np.eye(2), 2)
    assert curve.lambdas.tolist() == [0.5, 0.5]
    assert curve(0.5) == 1.0
    assert curve(0.49) == 0.0


def test_esd_matches_singular_values():
    A = sample_matrix(GAUSS, 40, 10, 3)
    curve = esd(A)
    s = singular_values(A).singular_values
    assert np.max(np.abs(curve.lambdas - np.sort(s**2 / 40))) <= 1e-12
    assert curve(curve.lambdas[0] - 1e-9) == 0.0
    assert curve(curve.lambdas[-1]) == 1.0
    assert np.all(np.diff(curve(np.linspace(0, 5, 500))) >= 0)


def test_esd_csv(tmp_path):
    A = sample_matrix(GAUSS, 40, 10, 3)
    curve = esd(A)
    rows = write_esd_csv(curve, 0.25, tmp_path / "esd.csv")
    lines = (tmp_path / "esd.csv").read_text().splitlines()
    assert lines[0] == "lambda,F_emp,F_mp"
    assert rows == 10 == len(lines) - 1
    lam = [float(line.split(",")[0]) for line in lines[1:]]
    assert lam == sorted(lam)


# --- Marchenko-Pastur --------------------------------------------------------------


@pytest.mark.parametrize("z", [0.05, 0.25, 0.5, 0.81, 0.95])
def test_mp_cdf_edges(z):
    r, R = mp_edges(z)
    assert mp_cdf(r, z) == 0.0
    assert mp_cdf(R, z) == 1.0
    assert mp_cdf(r - 1, z) == 0.0 and mp_cdf(R + 1, z) == 1.0


def test_mp_cdf_pinned_value():
    assert _mp_oracle(1.0, 0.25, dps=30) == pytest.approx(MP_AT_1_Z025, abs=1e-16)
    assert mp_cdf(1.0, 0.25) == pytest.approx(MP_AT_1_Z025, abs=1e-10)


@pytest.mark.parametrize("z", [0.25, 0.6])
def test_mp_cdf_against_mpmath_grid(z):
    r, R = mp_edges(z)
    ts = np.linspace(r - 0.05, R + 0.05, 100)
    ours = mp_cdf_array(ts, z)
    oracle = np.array([_mp_oracle(t, z) for t in ts])
    assert np.max(np.abs(ours - oracle)) <= 1e-8


@pytest.mark.parametrize("z", [0.1, 0.25, 0.9])
def test_mp_cdf_monotone(z):
    r, R = mp_edges(z)
    F = mp_cdf_array(np.linspace(r, R, 1000), z)
    assert np.all(np.diff(F) >= -1e-12)
    assert F[0] == 0.0 and F[-1] == 1.0


@pytest.mark.parametrize("z", [0.0, 1.0, -0.3, 1.5])
def test_mp_bad_z(z):
    with pytest.raises(InvalidParams):
        mp_cdf(0.5, z)


def test_ks_of_mp_quantile_curve():
    from scipy import optimize

    z = 0.25
    r, R = mp_edges(z)
    m = 10_000
    grid = np.linspace(r, R, 4001)
    F = mp_cdf_array(grid, z)
    probs = (np.arange(m) + 0.5) / m
    # invert on the grid, then polish each quantile by bisection
    guess = np.interp(probs, F, grid)
    lam = np.array(
        [
            optimize.brentq(lambda t, p=p: mp_cdf(t, z) - p, max(r, g - 0.01), min(R, g + 0.01))
            for p, g in zip(probs[::50], guess[::50])
        ]
    )
    assert np.max(np.abs(lam - guess[::50])) < 1e-3
    d = ks_distance(EsdCurve(np.sort(guess)), z)
    assert d <= 1e-3


def test_ks_degenerate_curve():
    z = 0.25
    r, _ = mp_edges(z)
    d = ks_distance(EsdCurve(np.array([r])), z)
    assert d == 1.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=50), st.floats(0.05, 0.95))
def test_ks_in_unit_interval(lams, z):
    d = ks_distance(EsdCurve(np.sort(np.array(lams))), z)
    assert 0.0 <= d <= 1.0


def test_ks_against_dense_evaluation():
    A = sample_matrix(GAUSS, 80, 20, 5)
    curve = esd(A)
    ts = np.linspace(0, 3, 20001)
    dense = np.max(np.abs(curve(ts) - mp_cdf_array(ts, 0.25)))
    d = ks_distance(curve, 0.25)
    assert dense <= d + 1e-12
    assert d - dense <= 0.02


@pytest.mark.slow
def test_smallest_singular_value_below_edge_in_most_trials():
    z = 0.25
    hits = 0
    for t in range(50):
        A = sample_matrix(GAUSS, 1600, 400, 1000 + t)
        hits += singular_values(A).scaled_sm <= (1 - math.sqrt(z)) + 0.08
    assert hits >= 48
