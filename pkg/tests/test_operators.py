import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from helpers import random_kernels, random_views
from mvdm.exceptions import DataError, NumericalError
from mvdm.kernels import KernelMatrix, gaussian_kernel
from mvdm.operators import (alternating_diffusion, assemble_multiview, block_kernel,
                            desa_operator, generalized_multiview, kcca, kernel_product,
                            kernel_sum, single_view_operator, transition_probability)
from mvdm.spectral import decompose


def km(a):
    return KernelMatrix(np.atleast_2d(np.asarray(a, dtype=float)), 1.0)


def naive_matmul(A, B):
    n = A.shape[0]
    C = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            for s in range(n):
                C[i, j] += A[i, s] * B[s, j]
    return C


def test_scalar_two_view():
    op = assemble_multiview([km(0.5), km(0.4)])
    np.testing.assert_allclose(op.khat, [[0, 0.2], [0.2, 0]])
    np.testing.assert_array_equal(op.phat, [[0, 1], [1, 0]])


def test_three_identity_views():
    op = assemble_multiview([km(1), km(1), km(1)])
    np.testing.assert_array_equal(op.khat, 1 - np.eye(3))
    np.testing.assert_allclose(op.phat, (1 - np.eye(3)) / 2)


def test_blocks_match_triple_loop():
    K1, K2 = random_kernels(4, L=2, M=3)
    op = assemble_multiview([K1, K2])
    np.testing.assert_allclose(op.khat[:3, 3:], naive_matmul(K1.values, K2.values), atol=1e-12)
    np.testing.assert_allclose(op.khat[3:, :3], naive_matmul(K2.values, K1.values), atol=1e-12)
    assert np.all(op.khat[:3, :3] == 0) and np.all(op.khat[3:, 3:] == 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(2, 7))
def test_multiview_invariants(seed, L, M):
    op = assemble_multiview(random_kernels(seed, L=L, M=M))
    assert np.array_equal(op.khat, op.khat.T)
    assert np.all(op.khat >= 0) and np.all(op.phat >= 0)
    np.testing.assert_allclose(op.phat.sum(axis=1), 1.0, atol=1e-12)
    for l in range(L):
        assert np.all(op.khat[op.block(l), op.block(l)] == 0)
    if L == 2:
        v = np.r_[np.ones(M), -np.ones(M)]
        np.testing.assert_allclose(op.phat @ v, -v, atol=1e-12)


def test_single_kernel_rejected():
    with pytest.raises(DataError):
        assemble_multiview([km(1)])


def test_isolated_point_rejected():
    K1 = np.eye(3)
    K2 = np.eye(3)
    K2[1, 1] = 0.0
    with pytest.raises(NumericalError, match="sample 1"):
        assemble_multiview([K1, K2])


def test_same_view_transition_zero_at_t1():
    op = assemble_multiview(random_kernels(1, L=3, M=5))
    for l in range(3):
        for i in range(5):
            for j in range(5):
                assert transition_probability(op, 1, (l, i), (l, j)) == 0.0


def test_permutation_squared():
    op = assemble_multiview([km(0.5), km(0.4)])
    assert transition_probability(op, 2, (0, 0), (0, 0)) == 1.0


def test_rows_of_power_sum_to_one():
    op = assemble_multiview(random_kernels(2, L=2, M=4))
    total = sum(transition_probability(op, 3, (0, 1), (m, j)) for m in range(2) for j in range(4))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_t_zero_rejected():
    op = assemble_multiview(random_kernels(2))
    with pytest.raises(DataError):
        transition_probability(op, 0, (0, 0), (1, 0))


def test_smoothing_through_common_neighbour():
    # i and j share no direct affinity in either view, but both connect to s
    K1 = np.array([[1.0, 0.7, 0.0], [0.7, 1.0, 0.0], [0.0, 0.0, 1.0]])  # i=0, s=1
    K2 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.6], [0.0, 0.6, 1.0]])  # s=1, j=2
    assert K1[0, 2] == 0 and K2[0, 2] == 0
    op = assemble_multiview([K1, K2])
    expected = sum(K1[0, s] * K2[s, 2] for s in range(3)) / op.degrees[0]
    p = transition_probability(op, 1, (0, 0), (1, 2))
    assert p > 0
    assert p == pytest.approx(expected, abs=1e-15)


def test_kernel_product_powers(rng):
    K = gaussian_kernel(rng.normal(size=(5, 2)), 1.0)
    op = kernel_product([K, K, K])
    np.testing.assert_allclose(op.kernel, K.values ** 3, atol=1e-15)


@pytest.mark.parametrize("L", [2, 3])
def test_kernel_product_concatenation_same_sigma(L):
    # the Hadamard product of equal-sigma Gaussians is the concatenated-vector Gaussian
    views = random_views(9, L=L, M=12)
    s = 1.7
    op = kernel_product([gaussian_kernel(v, s) for v in views])
    Kw = gaussian_kernel(np.hstack(views), s)
    np.testing.assert_allclose(op.kernel, Kw.values, atol=1e-12)


def test_kernel_product_matches_loop():
    ks = random_kernels(3, L=3, M=4)
    op = kernel_product(ks)
    oracle = np.array([[ks[0].values[i, j] * ks[1].values[i, j] * ks[2].values[i, j]
                        for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(op.kernel, oracle, atol=1e-12)
    np.testing.assert_allclose(op.matrix, oracle / oracle.sum(axis=1, keepdims=True), atol=1e-12)


def test_kernel_sum_cases():
    ks = random_kernels(5, L=2, M=6)
    same = kernel_sum([ks[0], ks[0]])
    np.testing.assert_allclose(same.matrix, single_view_operator(ks[0]).matrix, atol=1e-15)
    np.testing.assert_array_equal(kernel_sum([km(1), km(1)]).matrix, [[1.0]])
    S = ks[0].values + ks[1].values
    np.testing.assert_allclose(kernel_sum(ks).matrix, S / S.sum(axis=1, keepdims=True), atol=1e-12)


def test_generalized_alpha_limits():
    K1, K2 = random_kernels(6, M=5)
    g1 = generalized_multiview(K1, K2, 1.0)
    np.testing.assert_array_equal(g1.matrix, assemble_multiview([K1, K2]).phat)
    g0 = generalized_multiview(K1, K2, 0.0)
    assert np.all(g0.matrix[:5, 5:] == 0) and np.all(g0.matrix[5:, :5] == 0)


def test_generalized_alpha_blockwise():
    K1, K2 = (k.values for k in random_kernels(7, M=2))
    g = generalized_multiview(K1, K2, 0.5)
    K = np.zeros((4, 4))
    K[:2, :2] = 0.5 * K1 @ K1
    K[2:, 2:] = 0.5 * K2 @ K2
    K[:2, 2:] = 0.5 * K1 @ K2
    K[2:, :2] = 0.5 * K2 @ K1
    np.testing.assert_allclose(g.matrix, K / K.sum(axis=1, keepdims=True), atol=1e-12)


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_generalized_alpha_range(alpha):
    K1, K2 = random_kernels(7, M=2)
    with pytest.raises(DataError):
        generalized_multiview(K1, K2, alpha)


def test_desa_scalar():
    res = desa_operator(km(1), km(1), n_clusters=1)
    np.testing.assert_allclose(res.abar, [[0, 1], [1, 0]])


def test_desa_symmetric_and_spectrum_matches_multiview():
    K1, K2 = random_kernels(8, M=7)
    res = desa_operator(K1, K2)
    np.testing.assert_allclose(res.abar, res.abar.T, atol=1e-12)
    phat = assemble_multiview([K1, K2]).phat
    ev = np.sort(np.linalg.eigvals(phat).real)
    np.testing.assert_allclose(np.sort(res.eigenvalues), ev, atol=1e-8)
    np.testing.assert_allclose(res.cluster_map.sum(axis=1), 1.0, atol=1e-12)


def test_kcca_scalar():
    a, b, g = 0.8, 0.6, 0.1
    res = kcca(km(a), km(b), gamma=g, n_components=2)
    expected = a * b / ((a + g) * (b + g))
    np.testing.assert_allclose(sorted(res.rho), [-expected, expected], atol=1e-12)
    assert res.rho[0] > 0


def test_kcca_large_gamma_vanishes():
    K1, K2 = random_kernels(10, M=5)
    assert np.max(np.abs(kcca(K1, K2, gamma=1e6, n_components=3).rho)) < 1e-9


def test_kcca_matches_general_eig_oracle():
    K1, K2 = (k.values for k in random_kernels(11, M=4))
    g = 0.05
    I = np.eye(4)
    Z = np.zeros((4, 4))
    lhs = np.block([[Z, K1 @ K2], [K2 @ K1, Z]])
    rhs = np.block([[(K1 + g * I) @ (K1 + g * I), Z], [Z, (K2 + g * I) @ (K2 + g * I)]])
    w = scipy.linalg.eig(lhs, rhs, right=False).real
    top = w[np.argsort(-np.abs(w), kind="stable")][:3]
    res = kcca(K1, K2, gamma=g, n_components=3)
    np.testing.assert_allclose(np.sort(np.abs(res.rho)), np.sort(np.abs(top)), atol=1e-8)
    assert np.all(np.abs(res.rho) <= 1 + 1e-8)


def test_kcca_bad_gamma():
    K1, K2 = random_kernels(11, M=3)
    with pytest.raises(DataError):
        kcca(K1, K2, gamma=0.0)


def test_alternating_cases(rng):
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(alternating_diffusion(P, P).matrix, np.eye(2))
    A = rng.random((4, 4))
    A /= A.sum(axis=1, keepdims=True)
    perm = np.eye(4)[[2, 0, 3, 1]]
    np.testing.assert_allclose(alternating_diffusion(A, perm).matrix, A @ perm)
    B = rng.random((4, 4))
    B /= B.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(alternating_diffusion(A, B).matrix.sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(DataError):
        alternating_diffusion(A, np.eye(3))


def test_operators_are_read_only():
    op = assemble_multiview(random_kernels(1))
    with pytest.raises(ValueError):
        op.phat[0, 0] = 1.0


def test_block_kernel_shape_mismatch():
    with pytest.raises(DataError):
        block_kernel([np.eye(2), np.eye(3)])


def test_single_view_decompose_roundtrip():
    K = random_kernels(3, L=1, M=6)[0]
    model = decompose(single_view_operator(K))
    assert model.eigenvalues[0] == pytest.approx(1.0)
