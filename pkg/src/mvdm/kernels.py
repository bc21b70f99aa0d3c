"""Per-view affinity kernels and bandwidth selection."""

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .exceptions import DataError

KINDS = ("gaussian", "laplacian", "correlation")


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric affinity matrix of one view.

    ``sigma`` is the bandwidth in the units of the kernel formula: the Gaussian
    and correlation kernels use ``exp(-d / (2 sigma^2))``, the Laplacian kernel
    uses ``exp(-d / sigma)``.
    """

    values: np.ndarray
    sigma: float
    kind: str = "gaussian"

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def n_samples(self):
        return self.values.shape[0]


def as_view(data, name="view", min_samples=2):
    """Validate one view as an ``(M, N)`` float array.

    A 1-D input is read as ``M`` samples of a single feature.
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DataError(f"{name}: expected a 2-D array, got shape {X.shape}")
    if X.shape[0] < min_samples:
        raise DataError(f"{name}: need at least {min_samples} samples, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise DataError(f"{name}: need at least 1 feature")
    bad = ~np.isfinite(X)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DataError(f"{name}: non-finite value at row {i}, column {j}")
    return X


def as_views(views):
    """Validate a list of row-aligned views."""
    out = [as_view(v, name=f"view {l + 1}") for l, v in enumerate(views)]
    sizes = {v.shape[0] for v in out}
    if len(sizes) > 1:
        raise DataError(
            "views must share the same number of samples, got "
            + ", ".join(str(v.shape[0]) for v in out))
    return out


def _check_sigma(sigma):
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise DataError(f"bandwidth must be a positive finite number, got {sigma}")
    return sigma


def _finish(K, sigma, kind):
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0)
    return KernelMatrix(K, sigma, kind)


def gaussian_kernel(view, sigma):
    """``K_ij = exp(-||x_i - x_j||^2 / (2 sigma^2))``."""
    X = as_view(view)
    sigma = _check_sigma(sigma)
    D2 = _accel.sq_dists(X)
    return _finish(np.exp(-D2 / (2.0 * sigma * sigma)), sigma, "gaussian")


def laplacian_kernel(view, sigma):
    """``K_ij = exp(-||x_i - x_j||_1 / sigma)``.

    The L1 norm is used between feature vectors; pass ``norm="l2"`` through
    :func:`make_kernel` to use the Euclidean norm instead.
    """
    return _laplacian(view, sigma, norm="l1")


def _laplacian(view, sigma, norm="l1"):
    X = as_view(view)
    sigma = _check_sigma(sigma)
    if norm == "l1":
        D = _accel.l1_dists(X)
    elif norm == "l2":
        D = np.sqrt(_accel.sq_dists(X))
    else:
        raise DataError(f"unknown norm {norm!r}")
    return _finish(np.exp(-D / sigma), sigma, "laplacian")


def correlation_matrix(view):
    """Pearson correlation between rows (samples), each row centred on its own mean."""
    X = as_view(view)
    Xc = X - X.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", Xc, Xc))
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise DataError(f"row {zero[0]} has zero variance; correlation is undefined")
    Z = Xc / norms[:, None]
    T = np.clip(Z @ Z.T, -1.0, 1.0)
    T = 0.5 * (T + T.T)
    np.fill_diagonal(T, 1.0)
    return T


def correlation_kernel(view, sigma):
    """``K_ij = exp((T_ij - 1) / (2 sigma^2))`` with ``T`` the row correlation."""
    sigma = _check_sigma(sigma)
    T = correlation_matrix(view)
    return _finish(np.exp((T - 1.0) / (2.0 * sigma * sigma)), sigma, "correlation")


def make_kernel(view, sigma, kind="gaussian", **kwargs):
    if kind == "gaussian":
        return gaussian_kernel(view, sigma)
    if kind == "laplacian":
        return _laplacian(view, sigma, **kwargs)
    if kind == "correlation":
        return correlation_kernel(view, sigma)
    raise DataError(f"unknown kernel kind {kind!r}; expected one of {KINDS}")


def max_min_bandwidth(view, C=1.0):
    """Max-min scale: ``C * max_j min_{i != j} ||x_i - x_j||^2``.

    Returns the squared bandwidth ``sigma^2``. ``C`` in ``[1, 1.5]`` is the usual
    single-view choice; smaller values are fine when several views are fused.
    """
    X = as_view(view)
    C = float(C)
    if not C > 0:
        raise DataError(f"C must be positive, got {C}")
    nearest = _accel.min_offdiag(_accel.sq_dists(X))
    return C * float(nearest.max())


def median_distance(view):
    X = as_view(view)
    D = np.sqrt(_accel.sq_dists(X))
    return float(np.median(D[np.triu_indices(X.shape[0], 1)]))


def default_sigma_grid(view, n=25, decades=6):
    """Log-spaced grid from ``10^-decades`` to ``10^decades`` times the median distance."""
    d = median_distance(view)
    if d == 0:
        d = 1.0
    return d * np.logspace(-decades, decades, n)


@dataclass
class BandwidthScan:
    """Result of :func:`bandwidth_scan`.

    ``surfaces[(l, m)][a, b]`` is ``S^{lm}`` at ``grids[l][a]``, ``grids[m][b]``.
    ``slopes[(l, m)][a]`` is the slope of ``S^{lm}`` in ``log sigma_l``
    averaged over the ``sigma_m`` grid.
    """

    grids: list
    surfaces: dict
    slopes: dict
    selected: np.ndarray
    threshold: float = 0.8
    log_m: float = field(default=0.0)


def _validate_grid(grid, l):
    g = np.asarray(grid, dtype=np.float64).ravel()
    if g.size == 0:
        raise DataError(f"sigma grid for view {l + 1} is empty")
    if g.size < 3:
        raise DataError(f"sigma grid for view {l + 1} needs at least 3 points")
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise DataError(f"sigma grid for view {l + 1} must be positive and finite")
    if np.any(np.diff(g) <= 0):
        raise DataError(f"sigma grid for view {l + 1} must be strictly increasing")
    if np.log10(g[-1] / g[0]) < 4 - 1e-9:
        raise DataError(f"sigma grid for view {l + 1} must span at least 4 decades")
    return g


def bandwidth_scan(views, sigma_grids=None, threshold=0.8):
    """Multi-view bandwidth scan.

    For every ordered pair of views ``l != m`` evaluates
    ``S^{lm} = log(sum_ij [K^l(sigma_l) K^m(sigma_m)]_ij)`` over the grids, then
    picks for each view the smallest ``sigma_l`` inside the linear region of
    ``S`` (versus ``log sigma_l``) for every partner view.

    The linear region is where the local slope (centred differences in
    log-log) is at least ``threshold`` times the largest interior slope.
    ``S`` tends to ``log M`` for tiny bandwidths and ``3 log M`` for huge ones.
    """
    views = as_views(views)
    L = len(views)
    if L < 2:
        raise DataError("bandwidth_scan needs at least 2 views")
    if sigma_grids is None:
        sigma_grids = [default_sigma_grid(v) for v in views]
    if len(sigma_grids) != L:
        raise DataError(f"expected {L} sigma grids, got {len(sigma_grids)}")
    grids = [_validate_grid(g, l) for l, g in enumerate(sigma_grids)]

    # sum_ij (A B)_ij = (A 1) . (B^T 1) = rowsums(A) . rowsums(B) for symmetric kernels
    rowsums = []
    for X, g in zip(views, grids):
        D2 = _accel.sq_dists(X)
        rs = np.empty((g.size, X.shape[0]))
        for a, s in enumerate(g):
            rs[a] = gaussian_kernel_from_sq(D2, s).sum(axis=1)
        rowsums.append(rs)

    surfaces, slopes = {}, {}
    selected = np.empty(L)
    for l in range(L):
        logs = np.log(grids[l])
        picks = []
        for m in range(L):
            if m == l:
                continue
            S = np.log(rowsums[l] @ rowsums[m].T)
            surfaces[(l, m)] = S
            slope = np.gradient(S, logs, axis=0).mean(axis=1)
            slopes[(l, m)] = slope
            interior = slope[1:-1] if slope.size > 2 else slope
            peak = interior.max()
            if peak <= 0:
                picks.append(grids[l][-1])
                continue
            ok = np.flatnonzero(slope >= threshold * peak)
            picks.append(grids[l][ok[0]])
        selected[l] = max(picks)
    return BandwidthScan(grids, surfaces, slopes, selected, threshold,
                         float(np.log(views[0].shape[0])))


def gaussian_kernel_from_sq(D2, sigma):
    K = np.exp(-D2 / (2.0 * sigma * sigma))
    np.fill_diagonal(K, 1.0)
    return K
