"""Spectral decomposition of diffusion operators.

A row-stochastic ``P = D^-1 K`` with symmetric ``K`` is similar to
``P_s = D^-1/2 K D^-1/2``. With ``P_s = Pi diag(lam) Pi^T``, the right and left
eigenvectors of ``P`` are ``Psi = D^-1/2 Pi`` and ``Phi = D^1/2 Pi``, which
satisfy ``Psi^T Phi = I``.

Eigenpairs are ordered by ``|lam|`` descending; eigenvalues whose magnitudes
agree within ``TIE_TOL`` are ordered by algebraic value, so ``+s`` precedes
``-s``. Each right eigenvector is signed so that its largest-magnitude entry
is positive.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DataError, NumericalError
from .kernels import KernelMatrix
from .operators import MultiViewOperator, StochasticOperator, _kernel_list

TIE_TOL = 1e-12
TRIVIAL_TOL = 1e-9


@dataclass(frozen=True)
class SpectralModel:
    """Eigen-decomposition of a (multi-view) diffusion operator.

    ``right_vectors[:, k]`` is ``psi_k`` and ``left_vectors[:, k]`` is ``phi_k``.
    ``trivial_flags[k]`` marks the constant ``lam = 1`` mode and, for two views,
    the ``lam = -1`` view-parity mode. Row ``l*M + i`` belongs to sample ``i``
    of view ``l``.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    symmetric_vectors: np.ndarray
    trivial_flags: np.ndarray
    degrees: np.ndarray
    n_views: int
    n_samples: int
    residual: float = 0.0

    @property
    def nontrivial(self):
        """Indices of the non-trivial eigenpairs, in spectral order."""
        return np.flatnonzero(~self.trivial_flags)

    def block(self, l):
        M = self.n_samples
        return slice(l * M, (l + 1) * M)


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def spectral_order(w, tol=TIE_TOL):
    """Permutation sorting by ``|w|`` descending, near-ties by ``w`` descending."""
    w = np.asarray(w)
    order = np.argsort(-np.abs(w), kind="stable")
    out = []
    i = 0
    n = len(order)
    while i < n:
        j = i + 1
        a0 = abs(w[order[i]])
        while j < n and a0 - abs(w[order[j]]) <= tol * max(1.0, a0):
            j += 1
        group = order[i:j]
        out.extend(group[np.argsort(-w[group], kind="stable")])
        i = j
    return np.asarray(out, dtype=np.intp)


def _align_to(w, V, target_value, target_vec, tol=TRIVIAL_TOL):
    """Rotate the eigenspace of ``target_value`` so that ``target_vec`` is one of its columns.

    Returns the column index carrying ``target_vec`` or ``None``.
    """
    idx = np.flatnonzero(np.abs(w - target_value) < tol)
    if idx.size == 0:
        return None
    Vc = V[:, idx]
    p = Vc.T @ target_vec
    norm = np.linalg.norm(p)
    if norm < 0.5:
        return None
    if idx.size == 1:
        return int(idx[0])
    # orthonormal basis of R^c whose first vector is p / |p|
    Q, _ = np.linalg.qr(np.column_stack([p / norm, np.eye(idx.size)]))
    Q = Q[:, :idx.size]
    if Q[:, 0] @ p < 0:
        Q[:, 0] = -Q[:, 0]
    V[:, idx] = Vc @ Q
    w[idx] = target_value
    return int(idx[0])


def _finalize(w, Pi, degrees, n_views, n_samples, residual_fn=None):
    w = np.array(w, dtype=np.float64)
    Pi = np.array(Pi, dtype=np.float64)
    degrees = np.asarray(degrees, dtype=np.float64)
    sq = np.sqrt(degrees)

    trivial = np.zeros(w.size, dtype=bool)
    const = sq / np.linalg.norm(sq)
    k = _align_to(w, Pi, 1.0, const)
    if k is not None:
        trivial[k] = True
    if n_views == 2:
        sign = np.ones_like(sq)
        sign[n_samples:] = -1.0
        parity = sign * const
        k = _align_to(w, Pi, -1.0, parity)
        if k is not None:
            trivial[k] = True

    order = spectral_order(w)
    w, Pi, trivial = w[order], Pi[:, order], trivial[order]

    Psi = Pi / sq[:, None]
    flip = Psi[np.argmax(np.abs(Psi), axis=0), np.arange(Psi.shape[1])] < 0
    Pi[:, flip] *= -1.0
    Psi[:, flip] *= -1.0
    Phi = Pi * sq[:, None]

    residual = residual_fn(w, Pi) if residual_fn is not None else 0.0
    degrees = degrees.copy()
    _freeze(w, Psi, Phi, Pi, trivial, degrees)
    return SpectralModel(w, Psi, Phi, Pi, trivial, degrees, n_views, n_samples, residual)


def _sym_eig(S, n_components=None, psd=False):
    n = S.shape[0]
    try:
        k = n if n_components is None else int(n_components)
        if k >= n or (not psd and 2 * k > n):
            return np.linalg.eigh(S)
        w_hi, V_hi = scipy.linalg.eigh(S, subset_by_index=[n - k, n - 1])
        if psd:
            return w_hi, V_hi
        w_lo, V_lo = scipy.linalg.eigh(S, subset_by_index=[0, k - 1])
        w = np.concatenate([w_lo, w_hi])
        V = np.column_stack([V_lo, V_hi])
        keep = spectral_order(w)[:k]
        return w[keep], V[:, keep]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed: {exc}") from None


def _operator_parts(op):
    if isinstance(op, MultiViewOperator):
        return op.khat, op.degrees, op.n_views, op.n_samples
    if isinstance(op, StochasticOperator):
        if op.kernel is None:
            raise DataError(f"{op.provenance} operator has no symmetric kernel; "
                            "use decompose_general")
        n = op.kernel.shape[0]
        return op.kernel, op.degrees, op.n_views, n // op.n_views
    raise DataError(f"cannot decompose object of type {type(op).__name__}")


def decompose(op, n_components=None, psd=False, max_residual=1e-6):
    """Eigen-decompose a symmetric-kernel diffusion operator via ``P_s``.

    ``n_components`` restricts the solve to the leading eigenpairs by ``|lam|``
    (the full dense problem otherwise). ``psd=True`` promises a positive
    semi-definite kernel so only the top end of the spectrum is computed.
    """
    K, d, n_views, M = _operator_parts(op)
    s = 1.0 / np.sqrt(d)
    Ps = s[:, None] * K * s[None, :]
    Ps = 0.5 * (Ps + Ps.T)
    w, Pi = _sym_eig(Ps, n_components, psd)

    def residual(w_, Pi_):
        return float(np.max(np.abs(Ps @ Pi_ - Pi_ * w_))) if w_.size else 0.0

    model = _finalize(w, Pi, d, n_views, M, residual)
    if model.residual > max_residual:
        raise NumericalError(
            f"eigen-decomposition residual {model.residual:.3e} exceeds {max_residual:.1e}")
    return model


def svd_block_eigenpairs(Kz):
    """Eigenpairs of ``[[0, Kz], [Kz^T, 0]]`` from the SVD ``Kz = V S U^T``.

    Returns ``(lam, Pi)`` with ``Pi = [[V, V], [U, -U]] / sqrt(2)`` and
    ``lam = [S, -S]``.
    """
    Kz = np.asarray(Kz, dtype=np.float64)
    V, S, Ut = np.linalg.svd(Kz)
    U = Ut.T
    Pi = np.block([[V, V], [U, -U]]) / np.sqrt(2.0)
    return np.concatenate([S, -S]), Pi


def decompose_svd_route(K1, K2, n_components=None, max_residual=1e-6):
    """Two-view decomposition through the SVD of the ``M x M`` normalised product.

    ``Kbar = D_rows^-1/2 (K1 K2) D_cols^-1/2``; the eigenpairs of ``P_s`` are
    assembled from its singular triplets.
    """
    A, B = _kernel_list([K1, K2])
    M = A.shape[0]
    Kz = A @ B
    drow = Kz.sum(axis=1)
    dcol = Kz.sum(axis=0)
    bad = np.flatnonzero(~(np.concatenate([drow, dcol]) > 0))
    if bad.size:
        i = int(bad[0])
        raise NumericalError(f"zero degree at sample {i % M} of view {i // M + 1}")
    rs, cs = 1.0 / np.sqrt(drow), 1.0 / np.sqrt(dcol)
    Kbar = rs[:, None] * Kz * cs[None, :]
    degrees = np.concatenate([drow, dcol])

    if n_components is None or n_components >= 2 * M:
        lam, Pi = svd_block_eigenpairs(Kbar)
    else:
        k = min(M, (int(n_components) + 1) // 2 + 1)
        G = Kbar @ Kbar.T
        G = 0.5 * (G + G.T)
        ev, V = scipy.linalg.eigh(G, subset_by_index=[M - k, M - 1])
        S = np.sqrt(np.clip(ev, 0.0, None))
        U = (Kbar.T @ V) / np.where(S > 0, S, 1.0)[None, :]
        U /= np.linalg.norm(U, axis=0, keepdims=True)
        Pi = np.block([[V, V], [U, -U]]) / np.sqrt(2.0)
        lam = np.concatenate([S, -S])

    def residual(w_, Pi_):
        top = Kbar @ Pi_[M:] - Pi_[:M] * w_
        bot = Kbar.T @ Pi_[:M] - Pi_[M:] * w_
        return float(max(np.max(np.abs(top)), np.max(np.abs(bot)))) if w_.size else 0.0

    model = _finalize(lam, Pi, degrees, 2, M, residual)
    if n_components is not None and n_components < 2 * M:
        model = truncate_model(model, n_components)
    if model.residual > max_residual:
        raise NumericalError(
            f"SVD-route residual {model.residual:.3e} exceeds {max_residual:.1e}")
    return model


def truncate_model(model, n_components):
    """Keep the leading ``n_components`` eigenpairs."""
    k = int(n_components)
    parts = [a[..., :k].copy() for a in (model.eigenvalues, model.right_vectors,
                                         model.left_vectors, model.symmetric_vectors,
                                         model.trivial_flags)]
    _freeze(*parts)
    return SpectralModel(*parts, model.degrees, model.n_views, model.n_samples, model.residual)


def decompose_general(op):
    """Eigenpairs of a non-symmetrisable stochastic operator (e.g. alternating diffusion).

    Eigenvalues are returned as real parts; complex pairs produced by round-off
    are reduced to their real components.
    """
    P = op.matrix if isinstance(op, StochasticOperator) else np.asarray(op, dtype=np.float64)
    w, V = np.linalg.eig(P)
    w, V = w.real, V.real
    order = spectral_order(w)
    w, V = w[order], V[:, order]
    norms = np.linalg.norm(V, axis=0)
    V = V / np.where(norms > 0, norms, 1.0)
    flip = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])] < 0
    V[:, flip] *= -1.0
    return w, V


def coupled_mapping_objective(rho, K1, K2, form="printed"):
    """Connectivity-preserving objective of a coupled 1-D mapping ``rho = (rho_x, rho_y)``.

    ``form="printed"``:  ``sum_ij (rx_i - rx_j)^2 Kz_ij + (ry_i - ry_j)^2 Kz_ji``.
    ``form="bipartite"``: ``rho^T (Dhat - Khat) rho = sum_ij Kz_ij (rx_i - ry_j)^2``,
    the quadratic form whose constrained minimiser is ``psi_1``.
    """
    A, B = _kernel_list([K1, K2])
    M = A.shape[0]
    rho = np.asarray(rho, dtype=np.float64).ravel()
    if rho.size != 2 * M:
        raise DataError(f"rho must have length {2 * M}, got {rho.size}")
    Kz = A @ B
    x, y = rho[:M], rho[M:]
    if form == "printed":
        dx = (x[:, None] - x[None, :]) ** 2
        dy = (y[:, None] - y[None, :]) ** 2
        return float(np.sum(dx * Kz) + np.sum(dy * Kz.T))
    if form == "bipartite":
        return float(np.sum(Kz * (x[:, None] - y[None, :]) ** 2))
    raise DataError(f"unknown form {form!r}")


def _psd_values(K, name):
    A = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    if w.min() < -1e-8 * max(abs(w.max()), 1e-300):
        raise DataError(f"{name} is not positive semi-definite (min eigenvalue {w.min():.3e})")
    return A, w, V


def product_eigenvalues(K1, K2):
    """Eigenvalues of ``K1 K2`` (descending) via the similar form ``K1^1/2 K2 K1^1/2``."""
    A, w, V = _psd_values(K1, "K1")
    B, _, _ = _psd_values(K2, "K2")
    R = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    S = R @ B @ R
    return np.sort(np.linalg.eigvalsh(0.5 * (S + S.T)))[::-1]


@dataclass
class DecayReport:
    """Trailing-product checks for ``K1 K2`` against the Hadamard product ``K1 o K2``.

    ``tail_bound_holds[k-1]`` compares the products of eigenvalues ``k..M-1`` for
    ``k = 1..M-1``; ``delta_bound_holds`` checks the product from ``r_delta`` onward
    against ``delta^(M-1-r_delta)``. Products are compared in log space with
    eigenvalues floored at ``floor`` (round-off level) and slack ``log_tol``.
    """

    product: np.ndarray
    hadamard: np.ndarray
    delta: float
    r_delta: int
    tail_bound_holds: np.ndarray
    delta_bound_holds: bool
    floor: float
    spectra: dict

    @property
    def ok(self):
        return bool(np.all(self.tail_bound_holds) and self.delta_bound_holds)


def decay_report(K1, K2, delta, models=None, rel_floor=1e-12, log_tol=1e-6):
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise DataError(f"delta must lie in (0, 1), got {delta}")
    A, _, _ = _psd_values(K1, "K1")
    B, _, _ = _psd_values(K2, "K2")
    M = A.shape[0]
    lam_prod = product_eigenvalues(A, B)
    lam_had = np.sort(np.linalg.eigvalsh(A * B))[::-1]
    floor = rel_floor * max(lam_prod[0], lam_had[0])
    lp = np.log(np.maximum(lam_prod, floor))
    lh = np.log(np.maximum(lam_had, floor))

    tail_p = np.cumsum(lp[::-1])[::-1]
    tail_h = np.cumsum(lh[::-1])[::-1]
    ks = np.arange(1, M)
    tail_ok = tail_p[ks] <= tail_h[ks] + log_tol * (M - ks)

    r_delta = int(np.count_nonzero(lam_had > delta))
    if r_delta >= M:
        delta_ok = True
    else:
        delta_ok = bool(tail_p[r_delta] <= (M - 1 - r_delta) * np.log(delta) + log_tol * (M - r_delta))

    spectra = {"product": lam_prod, "hadamard": lam_had}
    for name, m in (models or {}).items():
        spectra[name] = np.abs(m.eigenvalues)
    return DecayReport(lam_prod, lam_had, delta, r_delta, tail_ok, delta_ok, floor, spectra)


def power_spectrum(model, t):
    """Eigenvalues of ``P^t`` (``lam_k^t``) in the model's order."""
    return model.eigenvalues ** int(t)


def numerical_rank(model, t, tol=1e-6):
    """Number of eigenvalues of ``P^t`` above ``tol`` in magnitude."""
    return int(np.count_nonzero(np.abs(power_spectrum(model, t)) > tol))
