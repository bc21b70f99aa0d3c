"""Acceptance checks, one test per criterion.

Each test records a one-line verdict in ``RESULTS``; ``conftest.py`` prints
them in the terminal summary. Criteria that cannot hold as stated are marked
``xfail(strict=True)`` and keep the faithful assertion.
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from helpers import random_kernels, random_views
from mvdm.datasets import (gen_gaussian_clusters, gen_noisy_swiss_rolls, random_orthonormal)
from mvdm.embedding import (cross_view_distance, direct_inner_view_distance, inner_view_distance,
                            inner_view_distances, multiview_embed, truncated_distance_envelope)
from mvdm.evaluation import knn_loo_classify
from mvdm.extension import extend_x, extend_y, fit_extension
from mvdm.kernels import bandwidth_scan, gaussian_kernel, max_min_bandwidth
from mvdm.operators import assemble_multiview, kernel_product
from mvdm.pipeline import circles_bench, fit_method, helix_bench, resolve_sigmas
from mvdm.spectral import decay_report, decompose, decompose_svd_route, numerical_rank

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    return ok


def test_c01_eigenvalues_real_and_bounded():
    start = time.perf_counter()
    worst_imag = worst_mag = 0.0
    for seed in range(50):
        L = 2 + seed % 2
        op = assemble_multiview(random_kernels(1000 + seed, L=L, M=40))
        w = np.linalg.eigvals(op.phat)
        worst_imag = max(worst_imag, float(np.max(np.abs(w.imag))))
        lam = decompose(op).eigenvalues
        worst_mag = max(worst_mag, float(np.max(np.abs(lam))), float(np.max(np.abs(w.real))))
    elapsed = time.perf_counter() - start
    ok = worst_imag <= 1e-10 and worst_mag <= 1 + 1e-10 and elapsed < 30
    record(1, ok, f"max|Im|={worst_imag:.2e} max|lam|-1={worst_mag - 1:.2e} ({elapsed:.1f}s)")
    assert ok


def test_c02_svd_route_equivalence():
    start = time.perf_counter()
    worst_lam = worst_dist = 0.0
    for seed in range(20):
        K1, K2 = random_kernels(2000 + seed, M=30)
        a = decompose(assemble_multiview([K1, K2]))
        b = decompose_svd_route(K1, K2)
        worst_lam = max(worst_lam, float(np.max(np.abs(a.eigenvalues - b.eigenvalues))))
        for l in range(2):
            d = np.abs(inner_view_distances(a, l) - inner_view_distances(b, l))
            worst_dist = max(worst_dist, float(d.max()))
    elapsed = time.perf_counter() - start
    ok = worst_lam <= 1e-8 and worst_dist <= 1e-8 and elapsed < 30
    record(2, ok, f"max spectrum gap={worst_lam:.2e} max distance gap={worst_dist:.2e} ({elapsed:.1f}s)")
    assert ok


def test_c03_distance_identity():
    start = time.perf_counter()
    worst = 0.0
    for L in (2, 3):
        op = assemble_multiview(random_kernels(3000 + L, L=L, M=20))
        model = decompose(op)
        for t in (1, 2, 3):
            for l in range(L):
                for i in range(20):
                    for j in range(i, 20):
                        gap = abs(inner_view_distance(model, l, i, j, t)
                                  - direct_inner_view_distance(op, l, i, j, t))
                        worst = max(worst, gap)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 60
    record(3, ok, f"max |spectral - direct|={worst:.2e} ({elapsed:.1f}s)")
    assert ok


@pytest.mark.xfail(strict=True, reason=(
    "exp(-a/2s^2) exp(-b/2s^2) = exp(-(a+b)/2s^2): the Hadamard product of equal-sigma "
    "Gaussians is the concatenated-vector Gaussian at sigma_1, not sqrt(L) sigma_1"))
def test_c04_concatenation_identity():
    s1 = 1.3
    worst_stated = worst_same = 0.0
    for L in (2, 3):
        views = random_views(4000 + L, L=L, M=50)
        prod = kernel_product([gaussian_kernel(v, s1) for v in views]).kernel
        cat = np.hstack(views)
        stated = gaussian_kernel(cat, np.sqrt(L * s1 ** 2)).values
        same = gaussian_kernel(cat, s1).values
        worst_stated = max(worst_stated, float(np.max(np.abs(prod - stated))))
        worst_same = max(worst_same, float(np.max(np.abs(prod - same))))
    ok = worst_stated <= 1e-12
    record(4, ok, f"max gap at sigma_w=sqrt(L)sigma_1: {worst_stated:.2e}; "
                  f"at sigma_w=sigma_1: {worst_same:.2e}")
    assert ok


def test_c05_rotation_invariance():
    data = gen_noisy_swiss_rolls(5, M=300, noise_var=0.0)
    X = data.views[0]
    sigma = float(np.sqrt(max_min_bandwidth(X, 1.0)))
    KX = gaussian_kernel(X, sigma)
    worst = 0.0
    for q in range(20):
        R = random_orthonormal(500 + q)
        Y = X @ R.T
        model = decompose_svd_route(KX, gaussian_kernel(Y, sigma))
        worst = max(worst, cross_view_distance(model))
    ok = worst <= 1e-8
    record(5, ok, f"max CVDD over 20 transforms={worst:.2e}")
    assert ok


def test_c06_nystrom_exactness():
    data = gen_noisy_swiss_rolls(6, M=200, noise_var=0.5)
    X, Y = data.views
    sx = float(np.sqrt(max_min_bandwidth(X, 1.0)))
    sy = float(np.sqrt(max_min_bandwidth(Y, 1.0)))
    ext = fit_extension(X, Y, sx, sy, t=1, delta=0.05)
    emb = multiview_embed(ext.model, t=1, delta=0.05)
    assert np.array_equal(emb.indices, ext.coords)
    gx = float(np.max(np.abs(extend_x(ext, X) - emb.per_view_coords[0])))
    gy = float(np.max(np.abs(extend_y(ext, Y) - emb.per_view_coords[1])))
    ok = max(gx, gy) <= 1e-6
    record(6, ok, f"max gap view X={gx:.2e} view Y={gy:.2e} over {ext.coords.size} coordinates")
    assert ok


def test_c07_spectral_decay():
    failures = 0
    for seed in range(20):
        X, Y = random_views(7000 + seed, M=15)
        sx = float(np.sqrt(max_min_bandwidth(X, 1.0)))
        sy = float(np.sqrt(max_min_bandwidth(Y, 1.0)))
        rep = decay_report(gaussian_kernel(X, sx), gaussian_kernel(Y, sy), delta=0.1)
        failures += int(not rep.ok)
    ok = failures == 0
    record(7, ok, f"{20 - failures}/20 pairs satisfy both product inequalities at every index")
    assert ok


def test_c08_truncated_distance_envelope():
    op = assemble_multiview(random_kernels(8000, M=15))
    model = decompose(op)
    nt = model.nontrivial.size
    checked = violations = 0
    for t in (1, 2):
        for r in range(nt + 1):
            for l in range(2):
                for i in range(15):
                    for j in range(15):
                        lo, val, hi = truncated_distance_envelope(model, l, i, j, t, r)
                        checked += 1
                        violations += int(not (lo - 1e-12 <= val <= hi + 1e-12))
    ok = violations == 0
    record(8, ok, f"{checked - violations}/{checked} (pair, r, t) envelopes hold")
    assert ok


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason=(
    "at sigma_n^2 = 0.16 the noise links the two circles, so the first diffusion coordinate "
    "of every method follows the angle; all methods sit near 0.51 accuracy and the multi-view "
    "map does not exceed both single views and the kernel product"))
def test_c09_coupled_circles():
    start = time.perf_counter()
    rep = circles_bench([0.03, 0.16], trials=50, seed=2024)
    elapsed = time.perf_counter() - start
    acc = rep["mean_accuracy"]
    mv_low = acc["multiview"][0]
    mv, sx, sy, kp = (acc[m][1] for m in ("multiview", "single_x", "single_y", "kernel_product"))
    ok = mv_low >= 0.95 and mv > sx and mv > sy and mv >= kp and elapsed < 600
    record(9, ok, f"0.03: MV={mv_low:.3f}; 0.16: MV={mv:.3f} X={sx:.3f} Y={sy:.3f} "
                  f"KP={kp:.3f} ({elapsed:.0f}s)")
    assert ok


def test_c10_scan_asymptotes():
    data = gen_noisy_swiss_rolls(10, M=200, noise_var=0.5)
    scan = bandwidth_scan(list(data.views))
    S = scan.surfaces[(0, 1)]
    logM = np.log(200)
    lo, hi = abs(S[0, 0] - logM), abs(S[-1, -1] - 3 * logM)
    ok = lo <= 1e-3 and hi <= 1e-3
    record(10, ok, f"|S_min - log M|={lo:.2e} |S_max - 3 log M|={hi:.2e}")
    assert ok


def test_c11_helix_recovery():
    out, _, _ = helix_bench("a", M=1000)
    ok = out["multiview_x"] > 0.95 and out["multiview_y"] > 0.95
    record(11, ok, f"rank corr X={out['multiview_x']:.4f} Y={out['multiview_y']:.4f} "
                   f"(kernel product {out['kernel_product']:.4f}, not gated)")
    assert ok


def test_c12_classification_pipeline():
    lines = []
    ok = True
    for r in (3, 4):
        mv, single = [], []
        for seed in range(10):
            ds = gen_gaussian_clusters(seed, n_clusters_per_view=(3,) * 6, points_per_cluster=40)
            sig = resolve_sigmas(ds.views, "auto:maxmin", C=0.5)
            mv.append(knn_loo_classify(fit_method("multiview", ds.views, sig, r=r).representation,
                                       ds.labels))
            single.append([knn_loo_classify(
                fit_method("single", ds.views, sig, r=r, view=l).representation, ds.labels)
                for l in range(6)])
        m, s = float(np.mean(mv)), float(np.max(np.mean(single, axis=0)))
        ok &= m >= s - 0.02
        lines.append(f"r={r}: MV={m:.3f} best single={s:.3f}")
    record(12, ok, "; ".join(lines))
    assert ok


def test_c13_power_decay():
    data = gen_noisy_swiss_rolls(13, M=200, noise_var=0.5)
    X, Y = data.views
    Z = X @ random_orthonormal(99).T + np.random.default_rng(13).normal(0, 0.5, size=X.shape)
    views = [X, Y, Z]
    kernels = [gaussian_kernel(v, float(np.sqrt(max_min_bandwidth(v, 1.0)))) for v in views]
    model = decompose(assemble_multiview(kernels))
    ranks = [numerical_rank(model, t) for t in (1, 2, 4, 8)]
    ok = all(a >= b for a, b in zip(ranks, ranks[1:]))
    record(13, ok, f"numerical ranks at t=1,2,4,8: {ranks}")
    assert ok


def _run_cli(args, threads, cwd):
    env = dict(os.environ, MVDM_THREADS=str(threads), NUMBA_NUM_THREADS="4")
    subprocess.run([sys.executable, "-m", "mvdm.cli", *args], env=env, cwd=cwd, check=True,
                   capture_output=True)


def _tree_bytes(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_c14_determinism(tmp_path):
    data = tmp_path / "data"
    _run_cli(["gen", "--dataset", "coupled-circles", "--M", "200", "--noise", "0.1",
              "--seed", "3", "--out", str(data)], 1, tmp_path)
    views = ["--views", str(data / "view_1.csv"), str(data / "view_2.csv")]
    jobs = {
        "embed": ["embed", *views, "--sigma", "auto:maxmin", "--t", "1", "--delta", "0.05"],
        "bench_circles": ["bench", "--experiment", "circles", "--noise-grid", "0.03:0.16:2",
                          "--trials", "3", "--M", "200", "--seed", "1"],
        "bench_helix": ["bench", "--experiment", "helix", "--M", "300"],
    }
    mismatched = []
    for name, args in jobs.items():
        outputs = []
        for threads in (1, 4):
            for rep in range(2):
                out = tmp_path / f"{name}_{threads}_{rep}"
                _run_cli([*args, "--out", str(out)], threads, tmp_path)
                outputs.append(_tree_bytes(out))
        if not outputs[0] or any(o != outputs[0] for o in outputs[1:]):
            mismatched.append(name)
    ok = not mismatched
    record(14, ok, "bench/embed outputs byte-identical over 2 runs x MVDM_THREADS in {1, 4}"
           if ok else f"differences in {mismatched}")
    assert ok
