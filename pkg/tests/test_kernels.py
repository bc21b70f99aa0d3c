import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from helpers import naive_gaussian
from mvdm.datasets import gen_noisy_swiss_rolls
from mvdm.exceptions import DataError
from mvdm.kernels import (as_views, bandwidth_scan, correlation_kernel, correlation_matrix,
                          default_sigma_grid, gaussian_kernel, laplacian_kernel, make_kernel,
                          max_min_bandwidth)


def test_gaussian_diagonal_is_one(rng):
    K = gaussian_kernel(rng.normal(size=(6, 3)), 0.7)
    assert np.all(np.diag(K.values) == 1.0)


def test_gaussian_two_points_exponent_minus_one():
    s = 0.8
    K = gaussian_kernel(np.array([0.0, s * np.sqrt(2)]), s)
    assert K.values[0, 1] == pytest.approx(np.exp(-1.0), abs=1e-15)


def test_gaussian_matches_double_loop(rng):
    X = rng.normal(size=(5, 3))
    K = gaussian_kernel(X, 1.3)
    np.testing.assert_allclose(K.values, naive_gaussian(X, 1.3), rtol=0, atol=1e-12)


def test_laplacian_values(rng):
    K = laplacian_kernel(np.array([0.0, 0.6]), 0.6)
    assert K.values[0, 1] == pytest.approx(np.exp(-1.0))
    X = rng.normal(size=(4, 3))
    K = laplacian_kernel(X, 2.0)
    oracle = np.array([[np.exp(-np.abs(a - b).sum() / 2.0) for b in X] for a in X])
    np.testing.assert_allclose(K.values, oracle, atol=1e-12)
    assert np.all(np.diag(K.values) == 1.0)


def test_laplacian_l2_option(rng):
    X = rng.normal(size=(4, 3))
    K = make_kernel(X, 1.5, "laplacian", norm="l2")
    oracle = np.array([[np.exp(-np.linalg.norm(a - b) / 1.5) for b in X] for a in X])
    np.testing.assert_allclose(K.values, oracle, atol=1e-12)


def test_correlation_perfect_and_anti():
    x = np.array([1.0, 3.0, 2.0, 5.0])
    X = np.vstack([x, 2.5 * x + 4.0, -(x - x.mean())])
    K = correlation_kernel(X, 0.9)
    assert K.values[0, 1] == pytest.approx(1.0, abs=1e-14)
    assert K.values[0, 2] == pytest.approx(np.exp(-1 / 0.81), abs=1e-14)


def test_correlation_matches_definition(rng):
    X = rng.normal(size=(5, 7))
    T = correlation_matrix(X)
    for i in range(5):
        for j in range(5):
            a = X[i] - X[i].mean()
            b = X[j] - X[j].mean()
            r = np.sum(a * b) / np.sqrt(np.sum(a * a) * np.sum(b * b))
            assert T[i, j] == pytest.approx(r, abs=1e-12)
    K = correlation_kernel(X, 1.1)
    np.testing.assert_allclose(K.values, np.exp((T - 1) / (2 * 1.21)), atol=1e-12)
    assert np.all(K.values > 0) and np.all(K.values <= 1)


def test_correlation_zero_variance_row_named():
    X = np.array([[1.0, 2.0, 3.0], [4.0, 4.0, 4.0], [0.0, 1.0, 0.0]])
    with pytest.raises(DataError, match="row 1"):
        correlation_kernel(X, 1.0)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.inf, np.nan])
def test_bad_sigma_rejected(bad):
    with pytest.raises(DataError):
        gaussian_kernel(np.zeros((3, 1)) + np.arange(3)[:, None], bad)


def test_nonfinite_input_named():
    X = np.ones((4, 2))
    X[2, 1] = np.nan
    with pytest.raises(DataError, match="row 2, column 1"):
        gaussian_kernel(X, 1.0)


def test_views_must_share_m():
    with pytest.raises(DataError, match="same number of samples"):
        as_views([np.zeros((3, 2)), np.zeros((4, 2))])


def test_single_sample_rejected():
    with pytest.raises(DataError):
        max_min_bandwidth(np.zeros((1, 2)), 1.0)


def test_max_min_examples():
    assert max_min_bandwidth(np.array([0.0, 1.0, 3.0]), 1.0) == 4.0
    assert max_min_bandwidth(np.array([0.0, 2.0]), 1.5) == pytest.approx(6.0)
    # a duplicated pair contributes 0; the isolated point drives the result
    assert max_min_bandwidth(np.array([0.0, 0.0, 5.0]), 1.0) == 25.0


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 9), st.integers(1, 3)),
              elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(0.1, 2.0))
def test_max_min_matches_brute_force(X, C):
    M = X.shape[0]
    mins = []
    for j in range(M):
        mins.append(min(float(np.sum((X[i] - X[j]) ** 2)) for i in range(M) if i != j))
    assert max_min_bandwidth(X, C) == pytest.approx(C * max(mins), rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(1, 3)),
              elements=st.floats(-5, 5, allow_nan=False)),
       st.floats(0.05, 5.0), st.sampled_from(["gaussian", "laplacian"]))
def test_kernel_invariants(X, sigma, kind):
    K = make_kernel(X, sigma, kind).values
    assert np.array_equal(K, K.T)
    assert np.all(np.diag(K) == 1.0)
    assert np.all((K >= 0) & (K <= 1))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 10), st.integers(1, 3)),
              elements=st.floats(-3, 3, allow_nan=False)),
       st.floats(0.1, 3.0))
def test_gaussian_psd(X, sigma):
    w = np.linalg.eigvalsh(gaussian_kernel(X, sigma).values)
    assert w.min() >= -1e-8 * w.max()


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 8), st.integers(1, 3)),
              elements=st.floats(-3, 3, allow_nan=False)),
       st.floats(0.1, 2.0), st.floats(1.0, 3.0))
def test_gaussian_monotone_in_sigma(X, s, factor):
    A = gaussian_kernel(X, s).values
    B = gaussian_kernel(X, s * factor).values
    assert np.all(A <= B + 1e-15)


def _swiss_pair(M=200, seed=3):
    return list(gen_noisy_swiss_rolls(seed, M=M, noise_var=0.5).views)


def test_scan_asymptotes_and_bounds():
    views = _swiss_pair()
    scan = bandwidth_scan(views)
    logM = np.log(200)
    for S in scan.surfaces.values():
        assert abs(S[0, 0] - logM) < 1e-6
        assert abs(S[-1, -1] - 3 * logM) < 1e-6
        assert np.all(S >= logM - 1e-6) and np.all(S <= 3 * logM + 1e-6)


def test_scan_surface_monotone():
    scan = bandwidth_scan(_swiss_pair())
    for S in scan.surfaces.values():
        assert np.all(np.diff(S, axis=0) >= -1e-9)
        assert np.all(np.diff(S, axis=1) >= -1e-9)


def test_scan_matches_product_oracle():
    views = _swiss_pair(M=30)
    grids = [default_sigma_grid(v, n=5) for v in views]
    scan = bandwidth_scan(views, grids)
    a, b = 2, 3
    prod = gaussian_kernel(views[0], grids[0][a]).values @ gaussian_kernel(views[1], grids[1][b]).values
    assert scan.surfaces[(0, 1)][a, b] == pytest.approx(np.log(prod.sum()), abs=1e-10)


def test_scan_selects_inside_grid():
    views = _swiss_pair()
    scan = bandwidth_scan(views)
    for l in range(2):
        assert scan.grids[l][0] < scan.selected[l] < scan.grids[l][-1]


@pytest.mark.parametrize("grid, msg", [
    ([], "empty"),
    ([1.0, 10.0], "at least 3"),
    ([1.0, 0.5, 1e5], "strictly increasing"),
    ([1.0, 2.0, 3.0], "4 decades"),
])
def test_scan_grid_validation(grid, msg):
    views = _swiss_pair(M=20)
    with pytest.raises(DataError, match=msg):
        bandwidth_scan(views, [grid, default_sigma_grid(views[1])])
