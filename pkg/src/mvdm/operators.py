"""Multi-view diffusion operator and the baseline fusion operators.

The block kernel for ``L`` views of ``M`` samples is the ``LM x LM`` matrix

    Khat[l, m] = K^l K^m   (l != m),     Khat[l, l] = 0,

normalised by its row sums into the row-stochastic ``Phat``. Block ``l``
occupies rows ``l*M : (l+1)*M`` (0-based views).
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DataError, NumericalError
from .kernels import KernelMatrix

PROVENANCES = ("single", "multiview", "kernel_product", "kernel_sum",
               "alternating", "generalized_alpha", "desa")


def _values(K):
    A = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError(f"kernel must be square, got shape {A.shape}")
    return A


def _kernel_list(kernels, min_count=1):
    mats = [_values(K) for K in kernels]
    if len(mats) < min_count:
        raise DataError(f"need at least {min_count} kernels, got {len(mats)}")
    sizes = {A.shape[0] for A in mats}
    if len(sizes) != 1:
        raise DataError(f"kernels must share the sample count, got {sorted(sizes)}")
    return mats


def _frozen(a):
    a.setflags(write=False)
    return a


def _row_normalize(K, n_views=1):
    d = K.sum(axis=1)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        M = K.shape[0] // n_views
        i = int(bad[0])
        where = f"sample {i % M} of view {i // M + 1}" if n_views > 1 else f"sample {i}"
        raise NumericalError(f"zero degree at {where}: the point is isolated")
    return d, K / d[:, None]


@dataclass(frozen=True)
class StochasticOperator:
    """Row-stochastic matrix together with the kernel it was normalised from.

    ``kernel`` is ``None`` when the operator is not a normalised symmetric
    kernel (alternating diffusion).
    """

    matrix: np.ndarray
    provenance: str
    kernel: np.ndarray = None
    degrees: np.ndarray = None
    n_views: int = 1

    @property
    def symmetric_kernel(self):
        return self.kernel is not None


@dataclass(frozen=True)
class MultiViewOperator:
    """Block kernel ``khat``, its degrees, and ``phat = diag(degrees)^-1 khat``."""

    khat: np.ndarray
    degrees: np.ndarray
    phat: np.ndarray
    n_views: int
    n_samples: int

    def block(self, l):
        """Row/column slice of view ``l`` (0-based)."""
        M = self.n_samples
        return slice(l * M, (l + 1) * M)

    def index(self, view, i):
        return view * self.n_samples + i

    def as_stochastic(self):
        return StochasticOperator(self.phat, "multiview", self.khat, self.degrees, self.n_views)


def block_kernel(kernels):
    """Assemble the ``LM x LM`` block kernel with zero diagonal blocks."""
    mats = _kernel_list(kernels, min_count=2)
    L, M = len(mats), mats[0].shape[0]
    khat = np.zeros((L * M, L * M))
    for l in range(L):
        for m in range(l + 1, L):
            prod = mats[l] @ mats[m]
            khat[l * M:(l + 1) * M, m * M:(m + 1) * M] = prod
            # (K^l K^m)^T = K^m K^l for symmetric factors; copy keeps khat exactly symmetric
            khat[m * M:(m + 1) * M, l * M:(l + 1) * M] = prod.T
    return khat


def assemble_multiview(kernels):
    """Build the multi-view operator from ``L >= 2`` per-view kernels."""
    mats = _kernel_list(kernels, min_count=2)
    khat = block_kernel(mats)
    degrees, phat = _row_normalize(khat, n_views=len(mats))
    return MultiViewOperator(_frozen(khat), _frozen(degrees), _frozen(phat),
                             len(mats), mats[0].shape[0])


def transition_probability(op, t, src, dst):
    """``[Phat^t]`` from sample ``src = (view, i)`` to ``dst = (view, j)``; 0-based."""
    t = int(t)
    if t < 1:
        raise DataError("t must be a positive integer (t = 0 is not a diffusion step)")
    (l, i), (m, j) = src, dst
    for v, k in ((l, i), (m, j)):
        if not (0 <= v < op.n_views and 0 <= k < op.n_samples):
            raise DataError(f"index (view {v}, sample {k}) out of range")
    row = np.zeros(op.phat.shape[0])
    row[op.index(l, i)] = 1.0
    for _ in range(t):
        row = row @ op.phat
    return float(row[op.index(m, j)])


def single_view_operator(kernel):
    K = _values(kernel)
    d, P = _row_normalize(K)
    return StochasticOperator(_frozen(P), "single", K, _frozen(d))


def kernel_product(kernels):
    """Hadamard product of the kernels, row-normalised."""
    mats = _kernel_list(kernels)
    Kc = mats[0].copy()
    for A in mats[1:]:
        Kc = Kc * A
    d, P = _row_normalize(Kc)
    return StochasticOperator(_frozen(P), "kernel_product", _frozen(Kc), _frozen(d))


def kernel_sum(kernels):
    """Sum of the kernels, row-normalised."""
    mats = _kernel_list(kernels)
    Ks = mats[0].copy()
    for A in mats[1:]:
        Ks = Ks + A
    d, P = _row_normalize(Ks)
    return StochasticOperator(_frozen(P), "kernel_sum", _frozen(Ks), _frozen(d))


def generalized_multiview(K1, K2, alpha):
    """Two-view kernel that also allows within-view steps.

    Blocks are ``(1-alpha) K1^2``, ``alpha K1 K2`` / ``alpha K2 K1`` and
    ``(1-alpha) K2^2``; ``alpha = 1`` recovers the multi-view operator and
    ``alpha = 0`` decouples the views.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DataError(f"alpha must lie in [0, 1], got {alpha}")
    A, B = _kernel_list([K1, K2])
    M = A.shape[0]
    cross = A @ B
    K = np.empty((2 * M, 2 * M))
    K[:M, :M] = (1.0 - alpha) * (A @ A)
    K[M:, M:] = (1.0 - alpha) * (B @ B)
    K[:M, M:] = alpha * cross
    K[M:, :M] = alpha * cross.T
    d, P = _row_normalize(K, n_views=2)
    return StochasticOperator(_frozen(P), "generalized_alpha", _frozen(K), _frozen(d), 2)


def alternating_diffusion(P1, P2):
    """Alternating diffusion ``P1 @ P2``; the product of stochastic matrices is stochastic."""
    A = P1.matrix if isinstance(P1, StochasticOperator) else np.asarray(P1, dtype=np.float64)
    B = P2.matrix if isinstance(P2, StochasticOperator) else np.asarray(P2, dtype=np.float64)
    if A.ndim != 2 or A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise DataError(f"shape mismatch: {A.shape} vs {B.shape}")
    return StochasticOperator(_frozen(A @ B), "alternating")


@dataclass(frozen=True)
class DeSaResult:
    """Symmetrically normalised bipartite kernel and its clustering map.

    ``cluster_map`` has one row per node of ``abar`` (``2M`` rows; the first
    ``M`` rows belong to view 1).
    """

    abar: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    cluster_map: np.ndarray


def desa_operator(K1, K2, n_clusters=2):
    """Two-view spectral clustering operator.

    ``A = [[0, W], [W^T, 0]]`` with ``W = K1 K2`` and
    ``Abar = Dbar^-1/2 A Dbar^-1/2``. The first block of ``Dbar`` holds the row
    sums of ``W`` and the second its column sums, i.e. ``Dbar`` is the row-sum
    degree of ``A``. The clustering map squares the top ``n_clusters``
    eigenvectors and normalises each row to unit sum.
    """
    A_, B_ = _kernel_list([K1, K2])
    M = A_.shape[0]
    W = A_ @ B_
    A = np.zeros((2 * M, 2 * M))
    A[:M, M:] = W
    A[M:, :M] = W.T
    d = A.sum(axis=1)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise NumericalError(f"zero degree at node {bad[0]}")
    s = 1.0 / np.sqrt(d)
    abar = s[:, None] * A * s[None, :]
    abar = 0.5 * (abar + abar.T)
    n_clusters = int(n_clusters)
    if not 1 <= n_clusters <= 2 * M:
        raise DataError(f"n_clusters must be in [1, {2 * M}], got {n_clusters}")
    w, V = np.linalg.eigh(abar)
    order = np.argsort(-w, kind="stable")
    w, V = w[order], V[:, order]
    sq = V[:, :n_clusters] ** 2
    rs = sq.sum(axis=1)
    zero = np.flatnonzero(rs == 0)
    if zero.size:
        raise NumericalError(f"clustering map undefined at node {zero[0]} (s[i] = 0)")
    return DeSaResult(_frozen(abar), _frozen(w), _frozen(V), _frozen(sq / rs[:, None]))


@dataclass(frozen=True)
class KCCAResult:
    """Canonical correlations (sorted by ``|rho|``, positive first on ties) and vectors.

    ``vectors1`` / ``vectors2`` are the dual coefficient blocks ``v_1``, ``v_2``;
    ``projections1`` / ``projections2`` are the canonical variates ``K1 v_1``, ``K2 v_2``.
    """

    rho: np.ndarray
    vectors1: np.ndarray
    vectors2: np.ndarray
    projections1: np.ndarray
    projections2: np.ndarray


def kcca(K1, K2, gamma=0.01, n_components=1):
    """Regularised kernel CCA by a dense generalised symmetric eigensolve.

    Solves ``[[0, K1 K2], [K2 K1, 0]] v = rho blkdiag((K1 + gI)^2, (K2 + gI)^2) v``.
    """
    gamma = float(gamma)
    if not gamma > 0:
        raise DataError(f"gamma must be positive, got {gamma}")
    A, B = _kernel_list([K1, K2])
    M = A.shape[0]
    n_components = int(n_components)
    if not 1 <= n_components <= 2 * M:
        raise DataError(f"n_components must be in [1, {2 * M}]")
    lhs = block_kernel([A, B])
    I = np.eye(M)
    R1, R2 = A + gamma * I, B + gamma * I
    rhs = np.zeros_like(lhs)
    rhs[:M, :M] = R1 @ R1
    rhs[M:, M:] = R2 @ R2
    rhs = 0.5 * (rhs + rhs.T)
    try:
        rho, V = scipy.linalg.eigh(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"KCCA right-hand matrix is singular: {exc}") from None
    order = np.lexsort((-rho, -np.abs(rho)))[:n_components]
    rho, V = rho[order], V[:, order]
    v1, v2 = V[:M], V[M:]
    return KCCAResult(_frozen(rho), _frozen(v1), _frozen(v2), _frozen(A @ v1), _frozen(B @ v2))
