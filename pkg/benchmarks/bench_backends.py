"""Time the numba kernels against the pure-numpy fallback.

Run with ``python benchmarks/bench_backends.py [--sizes 500 1000 2000]``.
Both backends are called directly, so the MVDM_DISABLE_NUMBA flag is not needed.
"""

import argparse
import time

import numpy as np

from mvdm import _accel


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 2000])
    ap.add_argument("--dim", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'M':>7}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>9}{'max diff':>11}")
    for M in args.sizes:
        X = rng.normal(size=(M, args.dim))
        C = rng.normal(size=(8, args.dim))
        D = _accel.sq_dists_numpy(X, X)
        cases = {
            "sq_dists": (lambda: _accel._sq_dists_nb(X, X), lambda: _accel.sq_dists_numpy(X, X)),
            "l1_dists": (lambda: _accel._l1_dists_nb(X, X), lambda: _accel.l1_dists_numpy(X, X)),
            "min_offdiag": (lambda: _accel._min_offdiag_nb(D), lambda: _accel.min_offdiag_numpy(D)),
            "nearest_centers": (lambda: _accel._nearest_centers_nb(X, C)[1],
                                lambda: _accel.nearest_centers_numpy(X, C)[1]),
        }
        for name, (nb, npy) in cases.items():
            nb()  # compile outside the timing
            diff = float(np.max(np.abs(np.asarray(nb()) - np.asarray(npy()))))
            tn, tp = best_of(nb, args.repeats), best_of(npy, args.repeats)
            print(f"{name:<16}{M:>7}{tn:>12.4f}{tp:>12.4f}{tp / tn:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
