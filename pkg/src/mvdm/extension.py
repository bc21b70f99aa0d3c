"""Nystrom out-of-sample extension of a two-view diffusion embedding."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _accel
from .embedding import select_coordinates
from .exceptions import DataError
from .kernels import as_view, as_views, gaussian_kernel
from .operators import assemble_multiview
from .spectral import decompose

LAMBDA_MIN = 1e-6
LOW_WEIGHT = 1e-6


class LowConfidenceExtension(UserWarning):
    """The new point is far from every training sample of its view."""


@dataclass(frozen=True)
class ExtensionModel:
    """Training data and decomposition needed to extend a two-view embedding.

    ``coords`` are the eigenpair indices being extended; ``omitted`` lists the
    indices dropped because ``|lam| < lambda_min``. ``kernel_x`` and
    ``kernel_y`` are the training kernels; ``degrees`` is the block-kernel degree
    vector of the training samples.
    """

    train_x: np.ndarray
    train_y: np.ndarray
    sigma_x: float
    sigma_y: float
    model: object
    t: int
    coords: np.ndarray
    omitted: np.ndarray
    kernel_x: np.ndarray
    kernel_y: np.ndarray

    @property
    def degrees(self):
        return self.model.degrees

    @property
    def sigmas(self):
        return self.sigma_x, self.sigma_y


def fit_extension(X, Y, sigma_x, sigma_y, t=1, delta=None, r=None, model=None,
                  lambda_min=LAMBDA_MIN, positive_only=False):
    """Fit the two-view model and choose which coordinates to extend.

    Without ``delta`` or ``r`` every non-trivial coordinate is kept. ``model``
    may be passed to reuse an existing decomposition of the same data.
    """
    X, Y = as_views([X, Y])
    Kx = gaussian_kernel(X, sigma_x)
    Ky = gaussian_kernel(Y, sigma_y)
    if model is None:
        model = decompose(assemble_multiview([Kx, Ky]))
    elif model.n_views != 2 or model.n_samples != X.shape[0]:
        raise DataError("model does not match the two training views")
    if delta is None and r is None:
        idx = model.nontrivial
        if positive_only:
            idx = idx[model.eigenvalues[idx] > 0]
    else:
        idx = select_coordinates(model, t, delta, r, positive_only)
    return extension_from_model(X, Y, Kx.sigma, Ky.sigma, model, t, idx, lambda_min)


def extension_from_model(X, Y, sigma_x, sigma_y, model, t, indices, lambda_min=LAMBDA_MIN):
    """Wrap an existing two-view decomposition (e.g. a loaded bundle) for extension.

    ``indices`` are the eigenpair indices to extend; those with
    ``|lam| < lambda_min`` are dropped with a warning and listed in ``omitted``.
    """
    X, Y = as_views([X, Y])
    if model.n_views != 2 or model.n_samples != X.shape[0]:
        raise DataError("model does not match the two training views")
    Kx = gaussian_kernel(X, sigma_x)
    Ky = gaussian_kernel(Y, sigma_y)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= model.eigenvalues.size):
        raise DataError("coordinate index out of range for the model")
    small = np.abs(model.eigenvalues[idx]) < lambda_min
    omitted = idx[small]
    if omitted.size:
        warnings.warn(
            f"{omitted.size} coordinate(s) with |lambda| < {lambda_min:g} omitted "
            f"from the extension (indices {omitted.tolist()[:10]})", stacklevel=2)
    kept = idx[~small]
    for a in (kept, omitted):
        a.setflags(write=False)
    return ExtensionModel(X, Y, Kx.sigma, Ky.sigma, model, int(t), kept, omitted,
                          Kx.values, Ky.values)


def _extend(ext, new, train_same, sigma_same, kernel_other, other_block):
    P = np.asarray(new, dtype=np.float64)
    if P.ndim == 1 and train_same.shape[1] > 1:
        P = P[None, :]
    P = as_view(P, name="new points", min_samples=1)
    if P.shape[1] != train_same.shape[1]:
        raise DataError(f"new points have {P.shape[1]} features, "
                        f"training view has {train_same.shape[1]}")
    # log-domain weights: shift by the row maximum so far points do not underflow
    logw = -_accel.sq_dists(P, train_same) / (2.0 * sigma_same * sigma_same)
    peak = logw.max(axis=1)
    if np.any(peak < np.log(LOW_WEIGHT)):
        far = np.flatnonzero(peak < np.log(LOW_WEIGHT))
        warnings.warn(
            f"{far.size} new point(s) have max kernel weight below {LOW_WEIGHT:g} "
            f"(first: row {far[0]}); extension is unreliable there",
            LowConfidenceExtension, stacklevel=3)
    w = np.exp(logw - peak[:, None])
    # transition row p(new, j) = sum_s k(new, s) K_other[s, j] / sum_{s, j}(...);
    # at a training point the normaliser is that sample's block-kernel degree
    row = w @ kernel_other
    p = row / row.sum(axis=1, keepdims=True)
    m = ext.model
    lam = m.eigenvalues[ext.coords]
    psi_hat = (p @ m.right_vectors[other_block][:, ext.coords]) / lam
    return psi_hat * lam ** ext.t


def extend_x(ext, x_new):
    """Extended coordinates ``lam_k^t psi_hat_k`` of new view-X points (one row per point)."""
    M = ext.model.n_samples
    return _extend(ext, x_new, ext.train_x, ext.sigma_x, ext.kernel_y, slice(M, 2 * M))


def extend_y(ext, y_new):
    """Mirror of :func:`extend_x` for new view-Y points."""
    M = ext.model.n_samples
    return _extend(ext, y_new, ext.train_y, ext.sigma_y, ext.kernel_x, slice(0, M))
