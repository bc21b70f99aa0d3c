"""Diffusion coordinates and diffusion distances."""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .exceptions import DataError, NumericalError
from .kernels import make_kernel
from .operators import MultiViewOperator, single_view_operator
from .spectral import SpectralModel, decompose

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class Embedding:
    """Per-view diffusion coordinates ``lam_k^t psi_k[l*M + i]``.

    ``indices`` are the eigenpair indices of ``source_model`` used as columns.
    """

    per_view_coords: tuple
    t: int
    delta: float
    indices: np.ndarray
    eigenvalues: np.ndarray
    source_model: SpectralModel

    @property
    def r(self):
        return int(self.indices.size)

    @property
    def n_views(self):
        return len(self.per_view_coords)

    def concatenated(self):
        """Concatenation of all per-view mappings, ``M x (L r)``."""
        return np.hstack(self.per_view_coords)


def _check_t(t):
    if int(t) != t or t < 1:
        raise DataError(f"t must be a positive integer, got {t}")
    return int(t)


def select_coordinates(model, t, delta=None, r=None, positive_only=False):
    """Eigenpair indices kept by the ``r(delta)`` truncation.

    Keeps non-trivial pairs with ``|lam_k|^t > delta |lam_1|^t``, ``lam_1`` being
    the leading non-trivial eigenvalue. A fixed ``r`` takes the first ``r``
    non-trivial pairs instead. ``positive_only`` keeps only ``lam > 0`` pairs;
    for two views this drops the mirrored ``-s`` copies and yields the
    ``M - 1`` dimensional coupled map.
    """
    t = _check_t(t)
    cand = model.nontrivial
    lam = model.eigenvalues
    if positive_only:
        cand = cand[lam[cand] > 0]
    cand = cand[np.abs(lam[cand]) > ZERO_TOL]
    if cand.size == 0:
        raise NumericalError(
            "no usable coordinate: every non-trivial eigenvalue vanishes, "
            "so no delta in (0, 1) yields a non-empty embedding")
    if r is not None:
        r = int(r)
        if r < 1 or r > cand.size:
            raise DataError(f"r must be in [1, {cand.size}], got {r}")
        return cand[:r]
    if delta is None or not 0.0 < delta < 1.0:
        raise DataError(f"delta must lie in (0, 1), got {delta}")
    mags = np.abs(lam[cand]) ** t
    keep = cand[mags > delta * mags[0]]
    if keep.size == 0:
        # mags[0] > delta * mags[0] for any delta < 1, so this only guards round-off
        raise NumericalError(
            f"delta={delta} leaves no coordinate; use delta < 1")
    return keep


def multiview_embed(model, t=1, delta=0.05, r=None, positive_only=False):
    """Per-view diffusion coordinates of a multi-view (or single-view) model."""
    t = _check_t(t)
    idx = select_coordinates(model, t, delta, r, positive_only)
    lam_t = model.eigenvalues[idx] ** t
    coords = tuple(np.ascontiguousarray(model.right_vectors[model.block(l)][:, idx] * lam_t)
                   for l in range(model.n_views))
    for c in coords:
        c.setflags(write=False)
    return Embedding(coords, t, delta, idx, model.eigenvalues[idx].copy(), model)


def single_view_embed(view, sigma, t=1, delta=0.05, kind="gaussian", r=None,
                      n_components=None):
    """Classic diffusion map of one view."""
    K = make_kernel(view, sigma, kind)
    model = decompose(single_view_operator(K), n_components=n_components,
                      psd=kind != "correlation" or None)
    return multiview_embed(model, t, delta, r)


def _check_pair(model, l, i, j):
    M = model.n_samples
    if not 0 <= l < model.n_views:
        raise DataError(f"view {l} out of range")
    for k in (i, j):
        if not 0 <= k < M:
            raise DataError(f"sample {k} out of range [0, {M})")


def inner_view_distance(model, l, i, j, t=1):
    """Squared inner-view diffusion distance from the spectrum.

    ``sum_k lam_k^(2t) (psi_k[l*M + i] - psi_k[l*M + j])^2`` over every
    eigenpair of the model (the constant mode contributes nothing).
    """
    t = _check_t(t)
    _check_pair(model, l, i, j)
    M = model.n_samples
    keep = ~_constant_mode(model)
    diff = model.right_vectors[l * M + i, keep] - model.right_vectors[l * M + j, keep]
    return float(np.sum(model.eigenvalues[keep] ** (2 * t) * diff * diff))


def _constant_mode(model):
    return model.trivial_flags & (model.eigenvalues > 0)


def inner_view_distances(model, l, t=1):
    """All squared inner-view diffusion distances of view ``l`` as an ``M x M`` matrix."""
    t = _check_t(t)
    keep = ~_constant_mode(model)
    C = model.right_vectors[model.block(l)][:, keep] * model.eigenvalues[keep] ** t
    return _accel.sq_dists(C)


def direct_inner_view_distance(op, l, i, j, t=1):
    """Squared inner-view distance by definition: ``||(e_a - e_b)^T P^t||^2`` weighted by ``1/Dhat``."""
    t = _check_t(t)
    if not isinstance(op, MultiViewOperator):
        raise DataError("direct_inner_view_distance expects a MultiViewOperator")
    a, b = op.index(l, i), op.index(l, j)
    rows = np.zeros((2, op.phat.shape[0]))
    rows[0, a] = 1.0
    rows[1, b] = 1.0
    for _ in range(t):
        rows = rows @ op.phat
    diff = rows[0] - rows[1]
    return float(np.sum(diff * diff / op.degrees))


def multiview_distance(emb, i, j):
    """Squared multi-view distance: sum over views of the embedded distances."""
    M = emb.per_view_coords[0].shape[0]
    for k in (i, j):
        if not 0 <= k < M:
            raise DataError(f"sample {k} out of range [0, {M})")
    total = 0.0
    for C in emb.per_view_coords:
        d = C[i] - C[j]
        total += float(d @ d)
    return total


def multiview_distances(emb):
    """All squared multi-view distances, ``M x M``."""
    return _accel.sq_dists(emb.concatenated())


def cross_view_distance(model, t=1):
    """Squared cross-view diffusion distance between the two views of a coupled model.

    Sums ``||Psi_t(x_i) - Psi_t(y_i)||^2`` over all samples using every
    non-trivial coordinate with positive eigenvalue (the coupled map; the
    ``-s`` modes are the view-antisymmetric mirrors of the ``+s`` modes).
    """
    t = _check_t(t)
    if model.n_views != 2:
        raise DataError(f"cross_view_distance needs exactly 2 views, got {model.n_views}")
    M = model.n_samples
    idx = model.nontrivial
    idx = idx[model.eigenvalues[idx] > 0]
    lam = model.eigenvalues[idx] ** t
    d = (model.right_vectors[:M, idx] - model.right_vectors[M:, idx]) * lam
    return float(np.sum(d * d))


def single_view_cross_distance(emb_x, emb_y, align=True):
    """Summed distance between two independently computed single-view embeddings.

    Coordinates are matched by index up to ``min(r_x, r_y)``. With ``align`` the
    sign of each coordinate of ``emb_y`` is chosen to minimise its contribution.
    """
    A = emb_x.per_view_coords[0]
    B = emb_y.per_view_coords[0]
    if A.shape[0] != B.shape[0]:
        raise DataError("embeddings must have the same number of samples")
    r = min(A.shape[1], B.shape[1])
    A, B = A[:, :r], B[:, :r]
    plus = np.sum((A - B) ** 2, axis=0)
    if not align:
        return float(plus.sum())
    minus = np.sum((A + B) ** 2, axis=0)
    return float(np.minimum(plus, minus).sum())


def truncated_distance_envelope(model, l, i, j, t, r):
    """Two-sided bound on the ``r``-truncated squared inner-view distance (two views).

    Returns ``(lower, value, upper)`` with ``upper = 2 S``, ``S`` the sum over
    the positive non-trivial modes, and
    ``lower = 2 (S - delta_r^(2t) (1 - [i == j]) / min(D_ii, D_jj))`` where
    ``delta_r`` is the largest discarded ``|lam|``.
    """
    t = _check_t(t)
    if model.n_views != 2:
        raise DataError("the truncation envelope is defined for two views")
    _check_pair(model, l, i, j)
    M = model.n_samples
    a, b = l * M + i, l * M + j
    nt = model.nontrivial
    if not 0 <= r <= nt.size:
        raise DataError(f"r must be in [0, {nt.size}]")
    lam = model.eigenvalues
    dpsi = model.right_vectors[a] - model.right_vectors[b]
    terms = lam ** (2 * t) * dpsi * dpsi
    value = float(np.sum(terms[nt[:r]]))
    pos = nt[lam[nt] > 0]
    S = float(np.sum(terms[pos]))
    delta_r = float(np.abs(lam[nt[r]])) if r < nt.size else 0.0
    Dt = min(model.degrees[a], model.degrees[b])
    lower = 2.0 * (S - delta_r ** (2 * t) * (0.0 if i == j else 1.0) / Dt)
    return lower, value, 2.0 * S
