"""Command-line front end: ``mvdm <subcommand> ...``.

Exit codes: 0 success, 2 configuration or input error, 1 numerical failure.
Messages go to standard error; data goes to files.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import io
from .datasets import DATASETS, generate
from .embedding import (Embedding, cross_view_distance, inner_view_distances, multiview_distances,
                        multiview_embed, single_view_cross_distance)
from .evaluation import clustering_accuracy, kmeans, knn_loo_classify, nmi
from .exceptions import DataError, NumericalError
from .extension import extend_x, extend_y, extension_from_model
from .kernels import KINDS, bandwidth_scan, make_kernel, max_min_bandwidth
from .operators import assemble_multiview, single_view_operator
from .pipeline import (BENCH_METHODS, METHODS, circles_bench, fit_method, helix_bench,
                       parse_grid, resolve_sigmas)
from .spectral import decompose, decompose_svd_route

log = logging.getLogger("mvdm")


def _add_view_args(p):
    p.add_argument("--views", nargs="+", required=True, metavar="CSV",
                   help="one CSV per view; row k of every file is sample k")
    p.add_argument("--header", action="store_true", help="skip the first line of every CSV")
    p.add_argument("--kernel", nargs="+", default=["gaussian"], choices=KINDS,
                   help="kernel kind, one value or one per view")
    p.add_argument("--sigma", nargs="+", default=["auto:maxmin"],
                   help="bandwidth per view: a number, auto:maxmin or auto:scan")
    p.add_argument("--C", type=float, default=1.0, help="max-min constant")


def _add_fit_args(p, r_default=None):
    p.add_argument("--method", default="multiview", choices=METHODS)
    p.add_argument("--t", type=int, default=1, help="diffusion time")
    p.add_argument("--delta", type=float, default=0.05, help="truncation accuracy")
    p.add_argument("--r", type=int, default=r_default, help="fixed embedding dimension")
    p.add_argument("--view", type=int, default=1, help="view used by --method single (1-based)")
    p.add_argument("--alpha", type=float, default=None, help="generalized_alpha weight")
    p.add_argument("--gamma", type=float, default=0.01, help="KCCA regulariser")


def build_parser():
    parser = argparse.ArgumentParser(prog="mvdm", description="Multi-view diffusion maps")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic dataset")
    p.add_argument("--dataset", required=True, choices=DATASETS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=None, help="noise variance")
    p.add_argument("--M", type=int, default=None, help="number of samples")
    p.add_argument("--clusters", default="6,6", help="clusters per view (gaussian-clusters)")
    p.add_argument("--points-per-cluster", type=int, default=100)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("bandwidth", help="max-min bandwidths and the multi-view scan")
    _add_view_args(p)
    p.add_argument("--scan", action="store_true", help="also run the bandwidth scan")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("embed", help="fit a method and write coordinates and the model")
    _add_view_args(p)
    _add_fit_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dump-operator", default=None, metavar="CSV",
                   help="write the row-stochastic operator as a dense CSV")

    p = sub.add_parser("spectrum", help="eigenvalues per method as CSV")
    _add_view_args(p)
    p.add_argument("--methods", nargs="+",
                   default=["multiview", "single", "kernel_product", "kernel_sum"],
                   choices=["multiview", "single", "kernel_product", "kernel_sum"])
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("distances", help="diffusion distance matrices")
    _add_view_args(p)
    p.add_argument("--kind", choices=("inner", "multiview", "cross"), default="inner")
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("extend", help="Nystrom extension from a saved two-view model")
    p.add_argument("--model", required=True, help="model bundle directory written by embed")
    p.add_argument("--points", required=True, help="CSV of new points")
    p.add_argument("--view", type=int, choices=(1, 2), default=1)
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", required=True, help="output CSV")

    for name, hlp, r_default in (("cluster", "k-means on an embedding", 1),
                                 ("classify", "leave-one-out k-NN on an embedding", 3)):
        p = sub.add_parser(name, help=hlp)
        _add_view_args(p)
        _add_fit_args(p, r_default)
        p.add_argument("--labels", required=True, help="CSV of integer labels")
        p.add_argument("--seed", type=int, default=0)
        if name == "cluster":
            p.add_argument("--K", type=int, default=None, help="clusters (default: label count)")
            p.add_argument("--restarts", type=int, default=10)
        else:
            p.add_argument("--k", type=int, default=1, help="neighbours")
        p.add_argument("--out", required=True, help="output JSON")

    p = sub.add_parser("bench", help="coupled-circles noise sweep or helix embeddings")
    p.add_argument("--experiment", required=True, choices=("circles", "helix"))
    p.add_argument("--noise-grid", default="0.03:0.6:10", help="start:stop:n noise variances")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--M", type=int, default=None)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--methods", nargs="+", default=list(BENCH_METHODS),
                   choices=list(BENCH_METHODS) + ["desa", "kcca", "alternating"])
    p.add_argument("--helix", choices=("a", "b", "both"), default="both")
    p.add_argument("--out", required=True, help="output directory")
    return parser


# ---------------------------------------------------------------------------

def _views_and_sigmas(args):
    views = io.read_views(args.views, args.header)
    sig = resolve_sigmas(views, args.sigma, args.C)
    return views, sig


def _alpha(args):
    if args.alpha is not None and args.method != "generalized_alpha":
        raise DataError("--alpha is only valid with --method generalized_alpha")
    return 0.5 if args.alpha is None else args.alpha


def _fit(args, views, sig):
    return fit_method(args.method, views, sig, args.kernel, args.t, args.delta, args.r,
                      view=args.view - 1, alpha=_alpha(args), gamma=args.gamma)


def cmd_gen(args):
    params = {}
    if args.M is not None:
        params["M"] = args.M
    if args.dataset == "gaussian-clusters":
        if args.M is not None:
            raise DataError("gaussian-clusters takes --clusters and --points-per-cluster, not --M")
        try:
            params["n_clusters_per_view"] = [int(c) for c in args.clusters.split(",")]
        except ValueError:
            raise DataError(f"malformed --clusters {args.clusters!r}") from None
        params["points_per_cluster"] = args.points_per_cluster
    if args.noise is not None:
        if args.dataset not in ("swiss-rolls", "coupled-circles"):
            raise DataError(f"--noise does not apply to {args.dataset}")
        params["noise_var"] = args.noise
    ds = generate(args.dataset, args.seed, **params)
    for l, V in enumerate(ds.views):
        io.write_csv(os.path.join(args.out, f"view_{l + 1}.csv"), V)
    io.write_csv(os.path.join(args.out, "labels.csv"), ds.labels)
    per_sample = {k: v for k, v in ds.latent.items() if v.ndim == 1 and v.shape[0] == ds.n_samples}
    if per_sample:
        names = sorted(per_sample)
        io.write_csv(os.path.join(args.out, "latent.csv"),
                     np.column_stack([per_sample[k] for k in names]), header=names)
    for k, v in sorted(ds.latent.items()):
        if k not in per_sample:
            io.write_csv(os.path.join(args.out, f"latent_{k}.csv"), v)
    log.info("wrote %s (%d samples, %d views) to %s", ds.name, ds.n_samples, ds.n_views, args.out)
    return 0


def cmd_bandwidth(args):
    views = io.read_views(args.views, args.header)
    s2 = [max_min_bandwidth(v, args.C) for v in views]
    report = {"C": args.C, "maxmin_sigma2": s2, "maxmin_sigma": [float(np.sqrt(x)) for x in s2]}
    if args.scan:
        scan = bandwidth_scan(views)
        report["scan"] = {"selected_sigma": scan.selected.tolist(), "threshold": scan.threshold,
                          "log_M": scan.log_m, "grids": [g.tolist() for g in scan.grids]}
        for (l, m), S in sorted(scan.surfaces.items()):
            io.write_csv(os.path.join(args.out, f"scan_{l + 1}_{m + 1}.csv"), S)
    io.write_json(os.path.join(args.out, "bandwidth.json"), report)
    return 0


def _coord_header(n):
    return ["index"] + [f"c{k + 1}" for k in range(n)]


def _write_coords(path, C):
    io.write_csv(path, C, header=_coord_header(C.shape[1]), index=True)


def cmd_embed(args):
    views, sig = _views_and_sigmas(args)
    meta = {"method": args.method, "t": args.t, "delta": args.delta, "sigma": sig,
            "kernel": args.kernel}
    if args.method == "single":
        results = [fit_method("single", views, sig, args.kernel, args.t, args.delta, args.r, view=l)
                   for l in range(len(views))]
        for l, res in enumerate(results):
            _write_coords(os.path.join(args.out, f"coords_view_{l + 1}.csv"), res.representation)
        meta["r"] = [int(res.representation.shape[1]) for res in results]
        meta["eigenvalues"] = [res.eigenvalues.tolist() for res in results]
        ops = [res.operator.matrix for res in results]
    else:
        res = _fit(args, views, sig)
        if len(res.coords) > 1:
            for l, C in enumerate(res.coords):
                _write_coords(os.path.join(args.out, f"coords_view_{l + 1}.csv"), C)
        else:
            _write_coords(os.path.join(args.out, "coords.csv"), res.coords[0])
        meta["r"] = int(res.coords[0].shape[1])
        meta["eigenvalues"] = res.eigenvalues.tolist()
        meta.update(res.extra)
        if res.model is not None and args.method in ("multiview", "generalized_alpha"):
            emb = multiview_embed(res.model, args.t, args.delta, args.r)
            cfg = dict(meta, indices=emb.indices.tolist())
            io.save_model(os.path.join(args.out, "model"), res.model, cfg, views)
        if args.method == "multiview":
            op = res.operator if res.operator is not None else assemble_multiview(
                [make_kernel(v, s, k) for v, s, k in zip(views, sig, _kinds_list(args, views))])
            ops = [op.phat]
        elif hasattr(res.operator, "matrix"):
            ops = [res.operator.matrix]
        elif hasattr(res.operator, "abar"):
            ops = [res.operator.abar]
        else:
            ops = []
    io.write_json(os.path.join(args.out, "embed.json"), meta)
    if args.dump_operator:
        if len(ops) != 1:
            raise DataError(f"--dump-operator needs a single operator; method {args.method} has "
                            f"{len(ops)}")
        io.write_csv(args.dump_operator, ops[0])
    return 0


def _kinds_list(args, views):
    k = list(args.kernel)
    return k * len(views) if len(k) == 1 else k


def _multiview_model(views, sig, kinds):
    kernels = [make_kernel(v, s, k) for v, s, k in zip(views, sig, kinds)]
    if len(views) == 2:
        return decompose_svd_route(kernels[0], kernels[1])
    return decompose(assemble_multiview(kernels))


def cmd_spectrum(args):
    views, sig = _views_and_sigmas(args)
    kinds = _kinds_list(args, views)
    cols = {}
    for m in args.methods:
        if m == "multiview":
            if len(views) < 2:
                raise DataError("multiview spectrum needs at least 2 views")
            cols["multiview"] = _multiview_model(views, sig, kinds).eigenvalues
        elif m == "single":
            for l, (v, s, k) in enumerate(zip(views, sig, kinds)):
                cols[f"single_{l + 1}"] = decompose(single_view_operator(make_kernel(v, s, k))).eigenvalues
        else:
            res = fit_method(m, views, sig, kinds, r=1)
            cols[m] = decompose(res.operator).eigenvalues
    n = max(len(c) for c in cols.values())
    names = list(cols)
    lines = [",".join(["index"] + names)]
    for i in range(n):
        cells = [str(i)] + [io.FLOAT_FMT % cols[k][i] if i < len(cols[k]) else "" for k in names]
        lines.append(",".join(cells))
    io.atomic_write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_distances(args):
    views, sig = _views_and_sigmas(args)
    kinds = _kinds_list(args, views)
    if len(views) < 2:
        raise DataError("distances need at least 2 views")
    model = _multiview_model(views, sig, kinds)
    if args.kind == "inner":
        for l in range(len(views)):
            io.write_csv(os.path.join(args.out, f"inner_view_{l + 1}.csv"),
                         inner_view_distances(model, l, args.t))
    elif args.kind == "multiview":
        emb = multiview_embed(model, args.t, args.delta, args.r)
        io.write_csv(os.path.join(args.out, "multiview.csv"), multiview_distances(emb))
    else:
        if len(views) != 2:
            raise DataError("cross-view distance needs exactly 2 views")
        singles = [fit_method("single", views, sig, kinds, args.t, args.delta, args.r, view=l)
                   for l in range(2)]
        embs = [Embedding((s.representation,), args.t, args.delta, np.arange(s.representation.shape[1]),
                          s.eigenvalues, s.model) for s in singles]
        io.write_json(os.path.join(args.out, "cross.json"), {
            "t": args.t, "sigma": sig, "cvdd": cross_view_distance(model, args.t),
            "svdd": single_view_cross_distance(embs[0], embs[1]),
            "svdd_raw": single_view_cross_distance(embs[0], embs[1], align=False)})
    return 0


def cmd_extend(args):
    model, cfg, views = io.load_model(args.model)
    if cfg.get("method") != "multiview" or model.n_views != 2 or len(views) != 2:
        raise DataError(f"{args.model}: extension needs a saved two-view multiview model")
    if any(k != "gaussian" for k in cfg.get("kernel", ["gaussian"])):
        raise DataError("extension is defined for Gaussian kernels only")
    sx, sy = cfg["sigma"]
    ext = extension_from_model(views[0], views[1], sx, sy, model, cfg["t"], cfg["indices"])
    pts = io.read_csv(args.points, args.header)
    C = extend_x(ext, pts) if args.view == 1 else extend_y(ext, pts)
    _write_coords(args.out, C)
    return 0


def _labels(args, M):
    y = io.read_labels(args.labels, args.header)
    if y.size != M:
        raise DataError(f"{args.labels}: {y.size} labels for {M} samples")
    return y


def cmd_cluster(args):
    views, sig = _views_and_sigmas(args)
    y = _labels(args, views[0].shape[0])
    res = _fit(args, views, sig)
    K = args.K if args.K is not None else int(np.unique(y).size)
    cl = kmeans(res.representation, K, seed=args.seed, restarts=args.restarts)
    io.write_json(args.out, {
        "method": args.method, "r": int(res.coords[0].shape[1]), "t": args.t, "sigma": sig,
        "K": K, "seed": args.seed, "accuracy": clustering_accuracy(cl.labels, y),
        "nmi": nmi(cl.labels, y), "inertia": cl.inertia})
    return 0


def cmd_classify(args):
    views, sig = _views_and_sigmas(args)
    y = _labels(args, views[0].shape[0])
    res = _fit(args, views, sig)
    io.write_json(args.out, {
        "method": args.method, "r": int(res.coords[0].shape[1]), "t": args.t, "sigma": sig,
        "k": args.k, "seed": args.seed,
        "accuracy": knn_loo_classify(res.representation, y, args.k)})
    return 0


def cmd_bench(args):
    if args.experiment == "circles":
        grid = parse_grid(args.noise_grid)
        if args.trials < 1:
            raise DataError("--trials must be positive")
        report = circles_bench(grid, args.trials, args.seed, args.methods,
                               M=args.M or 1600, C=args.C,
                               progress=lambda n, q: log.info("noise %.4g trial %d", n, q))
        io.write_json(os.path.join(args.out, "bench_circles.json"), report)
        return 0
    report = {}
    for which in (("a", "b") if args.helix == "both" else (args.helix,)):
        out, emb, kp = helix_bench(which, M=args.M or 1000, C=args.C)
        report[f"helix_{which}"] = out
        for l, C in enumerate(emb.per_view_coords):
            _write_coords(os.path.join(args.out, f"helix_{which}_multiview_view_{l + 1}.csv"), C)
        _write_coords(os.path.join(args.out, f"helix_{which}_kernel_product.csv"), kp.representation)
    io.write_json(os.path.join(args.out, "bench_helix.json"), report)
    return 0


COMMANDS = {"gen": cmd_gen, "bandwidth": cmd_bandwidth, "embed": cmd_embed,
            "spectrum": cmd_spectrum, "distances": cmd_distances, "extend": cmd_extend,
            "cluster": cmd_cluster, "classify": cmd_classify, "bench": cmd_bench}


def run(argv=None):
    """Parse ``argv`` and execute; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="mvdm: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"mvdm: numerical error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"mvdm: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mvdm: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
