"""Shared fixtures and naive oracles for the test suite."""

import numpy as np

from mvdm.kernels import gaussian_kernel


def random_views(seed, L=2, M=8, dims=(3, 2, 4)):
    rng = np.random.default_rng(seed)
    return [rng.normal(size=(M, dims[l % len(dims)])) for l in range(L)]


def random_kernels(seed, L=2, M=8, sigma=1.0):
    return [gaussian_kernel(v, sigma) for v in random_views(seed, L, M)]


def naive_gaussian(X, sigma):
    M = X.shape[0]
    K = np.empty((M, M))
    for i in range(M):
        for j in range(M):
            d = 0.0
            for k in range(X.shape[1]):
                d += (X[i, k] - X[j, k]) ** 2
            K[i, j] = np.exp(-d / (2 * sigma * sigma))
    return K
