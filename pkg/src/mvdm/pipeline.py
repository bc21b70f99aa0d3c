"""Method dispatch and the benchmark protocols shared by the CLI and the tests."""

from dataclasses import dataclass, field

import numpy as np

from .datasets import gen_coupled_circles, gen_helix_a, gen_helix_b
from .embedding import multiview_embed
from .evaluation import circular_rank_correlation, clustering_accuracy, kmeans, nmi
from .exceptions import DataError
from .kernels import as_views, bandwidth_scan, make_kernel, max_min_bandwidth
from .operators import (alternating_diffusion, assemble_multiview, desa_operator,
                        generalized_multiview, kcca, kernel_product, kernel_sum,
                        single_view_operator)
from .spectral import decompose, decompose_general, decompose_svd_route

METHODS = ("multiview", "single", "kernel_product", "kernel_sum", "desa", "kcca",
           "alternating", "generalized_alpha")
BENCH_METHODS = ("multiview", "single_x", "single_y", "kernel_product", "kernel_sum")


@dataclass
class MethodResult:
    """Output of :func:`fit_method`.

    ``representation`` (``M x d``) is what clustering and classification see:
    the concatenated per-view coordinates for coupled methods, the embedding
    itself for fused single-operator methods.
    """

    method: str
    representation: np.ndarray
    coords: tuple
    eigenvalues: np.ndarray
    model: object = None
    operator: object = None
    extra: dict = field(default_factory=dict)


def resolve_sigmas(views, rule, C=1.0):
    """Per-view bandwidths from numbers, ``auto:maxmin`` or ``auto:scan``.

    ``rule`` is a single entry (broadcast) or one entry per view.
    """
    views = as_views(views)
    L = len(views)
    if isinstance(rule, (str, float, int)):
        rule = [rule]
    rule = list(rule)
    if len(rule) == 1:
        rule = rule * L
    if len(rule) != L:
        raise DataError(f"got {len(rule)} bandwidths for {L} views")
    scan = None
    out = []
    for l, s in enumerate(rule):
        if isinstance(s, str) and s.startswith("auto:"):
            how = s[5:]
            if how == "maxmin":
                out.append(float(np.sqrt(max_min_bandwidth(views[l], C))))
            elif how == "scan":
                if scan is None:
                    scan = bandwidth_scan(views)
                out.append(float(scan.selected[l]))
            else:
                raise DataError(f"unknown bandwidth rule {s!r}; use auto:maxmin or auto:scan")
        else:
            try:
                v = float(s)
            except (TypeError, ValueError):
                raise DataError(f"bandwidth {s!r} is neither a number nor auto:maxmin/auto:scan") from None
            if not v > 0 or not np.isfinite(v):
                raise DataError(f"bandwidth must be positive, got {s}")
            out.append(v)
    return out


def _kinds(kinds, L):
    if isinstance(kinds, str):
        kinds = [kinds]
    kinds = list(kinds)
    if len(kinds) == 1:
        kinds = kinds * L
    if len(kinds) != L:
        raise DataError(f"got {len(kinds)} kernel kinds for {L} views")
    return kinds


def _need_two(method, L):
    if L != 2:
        raise DataError(f"method {method} needs exactly 2 views, got {L}")


def fit_method(method, views, sigmas, kinds="gaussian", t=1, delta=0.05, r=None,
               view=0, alpha=0.5, gamma=0.01, n_components=None):
    """Fit one embedding method and return its representation.

    ``n_components`` limits the eigensolve to the leading pairs (useful when
    ``r`` is small); ``None`` solves the full problem.
    """
    views = as_views(views)
    L = len(views)
    kinds = _kinds(kinds, L)
    if len(sigmas) != L:
        raise DataError(f"got {len(sigmas)} bandwidths for {L} views")

    if method == "single":
        if not 0 <= view < L:
            raise DataError(f"view {view} out of range")
        K = make_kernel(views[view], sigmas[view], kinds[view])
        op = single_view_operator(K)
        model = decompose(op, n_components, psd=kinds[view] == "gaussian")
        emb = multiview_embed(model, t, delta, r)
        c = emb.per_view_coords[0]
        return MethodResult(method, c, (c,), emb.eigenvalues, model, op)

    kernels = [make_kernel(v, s, k) for v, s, k in zip(views, sigmas, kinds)]

    if method == "multiview":
        if L == 2:
            model = decompose_svd_route(kernels[0], kernels[1], n_components)
            op = None
        else:
            op = assemble_multiview(kernels)
            model = decompose(op, n_components)
        emb = multiview_embed(model, t, delta, r)
        return MethodResult(method, emb.concatenated(), emb.per_view_coords, emb.eigenvalues,
                            model, op)

    if method == "kernel_product":
        # Hadamard product of per-view Gaussians at the common scale sqrt(sum sigma^2),
        # i.e. the Gaussian kernel of the concatenated feature vectors at that scale
        s0 = float(np.sqrt(np.sum(np.square(sigmas))))
        ks = [make_kernel(v, s0, k) for v, k in zip(views, kinds)]
        op = kernel_product(ks)
        model = decompose(op, n_components, psd=all(k == "gaussian" for k in kinds))
        emb = multiview_embed(model, t, delta, r)
        c = emb.per_view_coords[0]
        return MethodResult(method, c, (c,), emb.eigenvalues, model, op, {"sigma": s0})

    if method == "kernel_sum":
        op = kernel_sum(kernels)
        model = decompose(op, n_components, psd=all(k == "gaussian" for k in kinds))
        emb = multiview_embed(model, t, delta, r)
        c = emb.per_view_coords[0]
        return MethodResult(method, c, (c,), emb.eigenvalues, model, op)

    if method == "generalized_alpha":
        _need_two(method, L)
        op = generalized_multiview(kernels[0], kernels[1], alpha)
        model = decompose(op, n_components)
        emb = multiview_embed(model, t, delta, r)
        return MethodResult(method, emb.concatenated(), emb.per_view_coords, emb.eigenvalues,
                            model, op, {"alpha": alpha})

    r_fixed = 1 if r is None else int(r)

    if method == "alternating":
        _need_two(method, L)
        op = alternating_diffusion(single_view_operator(kernels[0]),
                                   single_view_operator(kernels[1]))
        w, V = decompose_general(op)
        # drop the stationary lam = 1 mode
        w, V = w[1:1 + r_fixed], V[:, 1:1 + r_fixed]
        c = V * w ** t
        return MethodResult(method, c, (c,), w, None, op)

    if method == "desa":
        _need_two(method, L)
        res = desa_operator(kernels[0], kernels[1], n_clusters=max(2, r_fixed + 1))
        M = views[0].shape[0]
        V = res.eigenvectors[:, 1:1 + r_fixed]
        coords = (V[:M], V[M:])
        return MethodResult(method, np.hstack(coords), coords, res.eigenvalues[1:1 + r_fixed],
                            None, res)

    if method == "kcca":
        _need_two(method, L)
        res = kcca(kernels[0], kernels[1], gamma, n_components=r_fixed)
        coords = (res.projections1, res.projections2)
        return MethodResult(method, np.hstack(coords), coords, res.rho, None, res)

    raise DataError(f"unknown method {method!r}; expected one of {METHODS}")


def trial_seed(seed, trial):
    """Deterministic per-trial seed derived from ``(seed, trial)``."""
    return int(np.random.SeedSequence(int(seed), spawn_key=(int(trial),)).generate_state(1)[0])


def parse_grid(text):
    """``start:stop:n`` -> ``n`` linearly spaced values (inclusive); a single number is allowed."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError
            return np.linspace(a, b, n)
    except ValueError:
        pass
    raise DataError(f"malformed grid {text!r}; expected start:stop:n")


def _bench_fit(name, views, sigmas, t):
    # one coordinate, as in the clustering protocol; small partial eigensolves
    if name == "multiview":
        return fit_method("multiview", views, sigmas, t=t, r=1, n_components=6)
    if name in ("single_x", "single_y"):
        return fit_method("single", views, sigmas, t=t, r=1, view=0 if name == "single_x" else 1,
                          n_components=4)
    if name in ("kernel_product", "kernel_sum"):
        return fit_method(name, views, sigmas, t=t, r=1, n_components=4)
    if name in ("desa", "kcca", "alternating"):
        return fit_method(name, views, sigmas, t=t, r=1)
    raise DataError(f"unknown bench method {name!r}")


def circles_bench(noise_levels, trials, seed, methods=BENCH_METHODS, M=1600, C=1.0, t=1,
                  progress=None):
    """Mean 2-means clustering accuracy per method and noise variance on the coupled circles.

    Every method clusters its first diffusion coordinate (both views'
    coordinates for coupled methods). Bandwidths are the max-min values of each
    view. Trials run sequentially with seeds from :func:`trial_seed`.
    """
    noise_levels = [float(n) for n in noise_levels]
    acc = {m: np.zeros((len(noise_levels), int(trials))) for m in methods}
    score = {m: np.zeros((len(noise_levels), int(trials))) for m in methods}
    for a, noise in enumerate(noise_levels):
        for q in range(int(trials)):
            s = trial_seed(seed, a * 100003 + q)
            ds = gen_coupled_circles(s, M=M, noise_var=noise)
            sig = resolve_sigmas(ds.views, "auto:maxmin", C)
            for m in methods:
                res = _bench_fit(m, ds.views, sig, t)
                lab = kmeans(res.representation, 2, seed=s).labels
                acc[m][a, q] = clustering_accuracy(lab, ds.labels)
                score[m][a, q] = nmi(lab, ds.labels)
            if progress:
                progress(noise, q)
    return {
        "experiment": "circles",
        "noise_levels": noise_levels,
        "trials": int(trials),
        "seed": int(seed),
        "M": int(M),
        "C": float(C),
        "t": int(t),
        "r": 1,
        "methods": list(methods),
        "mean_accuracy": {m: acc[m].mean(axis=1).tolist() for m in methods},
        "std_accuracy": {m: acc[m].std(axis=1).tolist() for m in methods},
        "mean_nmi": {m: score[m].mean(axis=1).tolist() for m in methods},
    }


def helix_bench(which="a", M=1000, C=1.0, t=1):
    """2-D embeddings of the helix pair and their circular rank correlation with the latent angle.

    The multi-view map uses the two leading positive non-trivial coordinates of
    each view; the kernel-product map is reported for comparison.
    """
    gen = {"a": gen_helix_a, "b": gen_helix_b}.get(which)
    if gen is None:
        raise DataError(f"unknown helix {which!r}")
    ds = gen(0, M=M)
    sig = resolve_sigmas(ds.views, "auto:maxmin", C)
    kernels = [make_kernel(v, s) for v, s in zip(ds.views, sig)]
    model = decompose_svd_route(kernels[0], kernels[1], n_components=12)
    emb = multiview_embed(model, t, r=2, positive_only=True)
    kp = fit_method("kernel_product", ds.views, sig, t=t, r=2, n_components=6)
    out = {"helix": which, "M": int(M), "sigma": sig, "t": int(t), "C": float(C)}
    lat = (ds.latent["a"], ds.latent["b"])
    for l, name in enumerate(("x", "y")):
        c = emb.per_view_coords[l]
        out[f"multiview_{name}"] = circular_rank_correlation(np.arctan2(c[:, 1], c[:, 0]), lat[l])
    c = kp.representation
    out["kernel_product"] = circular_rank_correlation(np.arctan2(c[:, 1], c[:, 0]), lat[0])
    return out, emb, kp
