"""Clustering and classification metrics over embeddings."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import rankdata

from . import _accel
from .datasets import rng_for
from .exceptions import DataError

MAX_ITER = 300


@dataclass(frozen=True)
class ClusteringResult:
    """Best k-means restart.

    ``history`` holds the inertia after every assignment step of the winning
    restart; ``restart`` is its index.
    """

    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_restarts: int
    seed: int
    restart: int
    n_iter: int
    history: tuple


def _points(points):
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise DataError("points must be a finite 2-D array")
    return X


def _plusplus(X, K, rng):
    M = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(M)]
    dmin = np.sum((X - centers[0]) ** 2, axis=1)
    for c in range(1, K):
        total = dmin.sum()
        if total <= 0:
            # all remaining points coincide with a centre; pick any
            idx = rng.integers(M)
        else:
            idx = int(np.searchsorted(np.cumsum(dmin), rng.uniform(0.0, total), side="right"))
            idx = min(idx, M - 1)
        centers[c] = X[idx]
        dmin = np.minimum(dmin, np.sum((X - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(X, centers, max_iter):
    K = centers.shape[0]
    labels, dmin = _accel.nearest_centers(X, centers)
    history = [float(dmin.sum())]
    it = 0
    for it in range(1, max_iter + 1):
        for c in range(K):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centre
                far = int(np.argmax(dmin))
                centers[c] = X[far]
                dmin[far] = 0.0
                labels[far] = c
        new_labels, dmin = _accel.nearest_centers(X, centers)
        history.append(float(dmin.sum()))
        stable = np.array_equal(new_labels, labels)
        labels = new_labels
        if stable:
            break
    return labels, centers, history, it


def kmeans(points, K, seed=0, restarts=10, max_iter=MAX_ITER):
    """Lloyd's algorithm with k-means++ seeding; returns the lowest-inertia restart.

    Restart ``q`` draws from stream ``q`` of ``seed``; ties in inertia go to
    the lowest restart index.
    """
    X = _points(points)
    K = int(K)
    if not 1 <= K <= X.shape[0]:
        raise DataError(f"K must be in [1, {X.shape[0]}], got {K}")
    restarts = int(restarts)
    if restarts < 1:
        raise DataError("restarts must be positive")
    best = None
    for q in range(restarts):
        rng = rng_for(seed, q)
        centers = _plusplus(X, K, rng)
        labels, centers, history, n_iter = _lloyd(X, centers, int(max_iter))
        inertia = history[-1]
        if best is None or inertia < best[0]:
            best = (inertia, q, labels, centers, history, n_iter)
    inertia, q, labels, centers, history, n_iter = best
    return ClusteringResult(labels, centers, inertia, restarts, int(seed), q, n_iter, tuple(history))


def _labels_pair(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise DataError(f"label vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise DataError("empty label vectors")
    return a, b


def contingency(a, b):
    a, b = _labels_pair(a, b)
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    C = np.zeros((ua.size, ub.size), dtype=np.int64)
    np.add.at(C, (ia, ib), 1)
    return C


def _entropy(p):
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def nmi(a, b):
    """Mutual information normalised by the arithmetic mean of the two entropies."""
    C = contingency(a, b).astype(np.float64)
    n = C.sum()
    P = C / n
    pa, pb = P.sum(axis=1), P.sum(axis=0)
    ha, hb = _entropy(pa), _entropy(pb)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    nz = P > 0
    mi = float(np.sum(P[nz] * np.log(P[nz] / np.outer(pa, pb)[nz])))
    return float(min(max(mi / (0.5 * (ha + hb)), 0.0), 1.0))


def clustering_accuracy(pred, truth):
    """Fraction of samples correctly labelled under the best one-to-one label matching."""
    C = contingency(pred, truth)
    rows, cols = linear_sum_assignment(-C)
    return float(C[rows, cols].sum() / C.sum())


def knn_loo_predict(embedding, labels, k=1):
    """Leave-one-out k-NN predictions.

    Neighbours are ordered by distance, then index. A vote tie goes to the
    label with the smallest summed neighbour distance, then the lowest label.
    """
    X = _points(embedding)
    y = np.asarray(labels).ravel()
    M = X.shape[0]
    if y.size != M:
        raise DataError(f"{y.size} labels for {M} points")
    k = int(k)
    if not 1 <= k < M:
        raise DataError(f"k must be in [1, {M - 1}], got {k}")
    D = np.sqrt(_accel.sq_dists(X))
    np.fill_diagonal(D, np.inf)
    order = np.argsort(D, axis=1, kind="stable")[:, :k]
    classes = np.unique(y)
    pred = np.empty(M, dtype=y.dtype)
    for i in range(M):
        nb = order[i]
        best = None
        for c in classes:
            hit = y[nb] == c
            votes = int(hit.sum())
            if votes == 0:
                continue
            key = (-votes, float(D[i, nb[hit]].sum()), c)
            if best is None or key < best:
                best = key
        pred[i] = best[2]
    return pred


def knn_loo_classify(embedding, labels, k=1):
    """Leave-one-out k-NN accuracy."""
    y = np.asarray(labels).ravel()
    return float(np.mean(knn_loo_predict(embedding, y, k) == y))


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a @ a) * (b @ b))
    return float(a @ b / den) if den > 0 else 0.0


def circular_rank_correlation(angle, latent, period=2 * np.pi):
    """Spearman correlation between two circular variables.

    Both circles are cut at the same sample and unrolled; the result is the
    best value over every cut position and both orientations of ``angle``.
    """
    angle = np.asarray(angle, dtype=np.float64).ravel()
    latent = np.asarray(latent, dtype=np.float64).ravel()
    if angle.shape != latent.shape or angle.size < 3:
        raise DataError("angle and latent must be equal-length vectors of at least 3 values")
    best = -1.0
    for c in range(angle.size):
        v = rankdata(np.mod(latent - latent[c], period))
        for s in (1.0, -1.0):
            u = rankdata(np.mod(s * (angle - angle[c]), 2 * np.pi))
            best = max(best, _pearson(u, v))
    return best
