"""Hot pairwise kernels with a numba path and a pure-numpy fallback.

Set ``MVDM_DISABLE_NUMBA=1`` to force the numpy implementations (useful on
platforms without numba, or to cross-check the compiled path).
``MVDM_THREADS`` caps the number of numba worker threads.

Every kernel entry is computed independently (no cross-thread reductions), so
results do not depend on the thread count.
"""

import os

import numpy as np

_DISABLE = os.environ.get("MVDM_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLE:
        raise ImportError
    import numba
    from numba import njit, prange

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # always available and needs no external runtime
        numba.config.THREADING_LAYER = "workqueue"
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag in CI
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def configure_threads(n=None):
    """Cap numba threads at ``n`` (default: ``MVDM_THREADS`` env var)."""
    if n is None:
        env = os.environ.get("MVDM_THREADS")
        if not env:
            return None
        n = int(env)
    if not HAVE_NUMBA:
        return 1
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


# ---------------------------------------------------------------------------
# numpy reference implementations

_CHUNK_ELEMS = 1 << 22


def _row_chunks(n, m, p):
    step = max(1, _CHUNK_ELEMS // max(1, m * p))
    for start in range(0, n, step):
        yield slice(start, min(n, start + step))


def sq_dists_numpy(X, Y):
    out = np.empty((X.shape[0], Y.shape[0]))
    for rows in _row_chunks(X.shape[0], Y.shape[0], X.shape[1]):
        diff = X[rows, None, :] - Y[None, :, :]
        out[rows] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def l1_dists_numpy(X, Y):
    out = np.empty((X.shape[0], Y.shape[0]))
    for rows in _row_chunks(X.shape[0], Y.shape[0], X.shape[1]):
        out[rows] = np.abs(X[rows, None, :] - Y[None, :, :]).sum(axis=2)
    return out


def min_offdiag_numpy(D):
    D = D.copy()
    np.fill_diagonal(D, np.inf)
    return D.min(axis=0)


def nearest_centers_numpy(X, C):
    d = sq_dists_numpy(X, C)
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(X.shape[0]), labels]


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _sq_dists_nb(X, Y):
        n, p = X.shape
        m = Y.shape[0]
        out = np.empty((n, m))
        for i in prange(n):
            for j in range(m):
                acc = 0.0
                for k in range(p):
                    d = X[i, k] - Y[j, k]
                    acc += d * d
                out[i, j] = acc
        return out

    @njit(parallel=True, cache=True)
    def _l1_dists_nb(X, Y):
        n, p = X.shape
        m = Y.shape[0]
        out = np.empty((n, m))
        for i in prange(n):
            for j in range(m):
                acc = 0.0
                for k in range(p):
                    acc += abs(X[i, k] - Y[j, k])
                out[i, j] = acc
        return out

    @njit(parallel=True, cache=True)
    def _min_offdiag_nb(D):
        n = D.shape[0]
        out = np.empty(n)
        for j in prange(n):
            best = np.inf
            for i in range(n):
                if i != j and D[i, j] < best:
                    best = D[i, j]
            out[j] = best
        return out

    @njit(parallel=True, cache=True)
    def _nearest_centers_nb(X, C):
        n, p = X.shape
        k = C.shape[0]
        labels = np.empty(n, dtype=np.int64)
        dmin = np.empty(n)
        for i in prange(n):
            best = np.inf
            arg = 0
            for c in range(k):
                acc = 0.0
                for q in range(p):
                    d = X[i, q] - C[c, q]
                    acc += d * d
                if acc < best:
                    best = acc
                    arg = c
            labels[i] = arg
            dmin[i] = best
        return labels, dmin


def sq_dists(X, Y=None):
    """Squared Euclidean distances by direct per-pair differencing."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = X if Y is None else np.ascontiguousarray(Y, dtype=np.float64)
    if HAVE_NUMBA:
        return _sq_dists_nb(X, Y)
    return sq_dists_numpy(X, Y)


def l1_dists(X, Y=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = X if Y is None else np.ascontiguousarray(Y, dtype=np.float64)
    if HAVE_NUMBA:
        return _l1_dists_nb(X, Y)
    return l1_dists_numpy(X, Y)


def min_offdiag(D):
    """Column-wise minimum of a square matrix, skipping the diagonal."""
    D = np.ascontiguousarray(D, dtype=np.float64)
    if HAVE_NUMBA:
        return _min_offdiag_nb(D)
    return min_offdiag_numpy(D)


def nearest_centers(X, C):
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    if HAVE_NUMBA:
        return _nearest_centers_nb(X, C)
    return nearest_centers_numpy(X, C)


configure_threads()
