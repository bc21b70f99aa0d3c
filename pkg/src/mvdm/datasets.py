"""Seeded synthetic multi-view datasets.

Every generator draws from NumPy's PCG64 bit generator. Each view (and each
shared latent quantity) gets its own stream, ``SeedSequence(seed,
spawn_key=(stream,))``, so adding a view or changing one view's noise never
shifts the draws of another. "Spread linearly" grids include both endpoints.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError

# stream ids; view l uses VIEW_STREAM + l
LATENT_STREAM = 0
TRANSFORM_STREAM = 1
VIEW_STREAM = 16

DATASETS = ("gaussian-clusters", "swiss-rolls", "coupled-circles", "helix-a", "helix-b")


def rng_for(seed, stream):
    """Independent PCG64 generator for ``(seed, stream)``."""
    if seed is None or int(seed) < 0:
        raise DataError(f"seed must be a non-negative integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


@dataclass(frozen=True)
class LabeledViewSet:
    """Row-aligned views with ground-truth labels and generative parameters."""

    views: tuple
    labels: np.ndarray
    latent: dict = field(default_factory=dict)
    name: str = ""

    @property
    def n_samples(self):
        return self.labels.shape[0]

    @property
    def n_views(self):
        return len(self.views)


def _freeze(ds):
    for a in (*ds.views, ds.labels, *ds.latent.values()):
        a.setflags(write=False)
    return ds


def _check_noise(var, name="noise variance"):
    var = float(var)
    if not np.isfinite(var) or var < 0:
        raise DataError(f"{name} must be non-negative, got {var}")
    return np.sqrt(var)


def gen_gaussian_clusters(seed, n_clusters_per_view=(6, 6), points_per_cluster=100,
                          dim=9, center_var=8.0, cluster_var=2.0):
    """Gaussian clusters around centres shared by all views.

    Centres ``mu_j ~ N(0, center_var I)``; each view draws its own points
    ``N(mu_j, cluster_var I)``. The view with the most clusters ``K_max`` fixes
    ``M = K_max * points_per_cluster``; a view with ``K`` clusters uses the first
    ``K`` centres with ``M / K`` points each, so sample ``i`` belongs to cluster
    ``i * K // M`` of that view. ``labels`` are those of the finest view.
    """
    counts = [int(k) for k in n_clusters_per_view]
    if not counts or min(counts) < 1:
        raise DataError(f"cluster counts must be positive, got {counts}")
    ppc = int(points_per_cluster)
    if ppc < 1:
        raise DataError(f"points_per_cluster must be positive, got {ppc}")
    if int(dim) < 1:
        raise DataError(f"dim must be positive, got {dim}")
    kmax = max(counts)
    M = kmax * ppc
    for k in counts:
        if M % k:
            raise DataError(f"{k} clusters do not divide {M} samples evenly")
    if center_var < 0 or cluster_var < 0:
        raise DataError("variances must be non-negative")
    centers = rng_for(seed, LATENT_STREAM).normal(0.0, np.sqrt(center_var), size=(kmax, dim))
    views, view_labels = [], []
    for l, k in enumerate(counts):
        lab = np.arange(M) * k // M
        noise = rng_for(seed, VIEW_STREAM + l).normal(0.0, np.sqrt(cluster_var), size=(M, dim))
        views.append(centers[lab] + noise)
        view_labels.append(lab)
    finest = int(np.argmax(counts))
    latent = {"centers": centers, "view_labels": np.vstack(view_labels)}
    return _freeze(LabeledViewSet(tuple(views), view_labels[finest].copy(), latent,
                                  "gaussian-clusters"))


def gram_schmidt(A):
    """Orthonormalise the columns of ``A`` by modified Gram-Schmidt."""
    A = np.array(A, dtype=np.float64)
    n = A.shape[1]
    Q = np.zeros_like(A)
    for k in range(n):
        v = A[:, k].copy()
        for j in range(k):
            v -= (Q[:, j] @ v) * Q[:, j]
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise DataError("columns are linearly dependent")
        Q[:, k] = v / norm
    return Q


def random_orthonormal(seed, n=3, stream=TRANSFORM_STREAM):
    """Random orthonormal ``n x n`` matrix from Gram-Schmidt on Gaussian draws."""
    return gram_schmidt(rng_for(seed, stream).normal(size=(n, n)))


def swiss_roll(s, h):
    theta = 1.5 * np.pi * s
    return np.column_stack([6 * theta * np.cos(theta), h, 6 * theta * np.sin(theta)])


def gen_noisy_swiss_rolls(seed, M=1000, noise_var=0.0, rotation=None):
    """A Swiss roll and an orthonormally transformed copy, each with Gaussian noise.

    ``s`` is spread linearly on ``[1, 3]``, ``theta = 1.5 pi s``, ``h ~ U[0, 100]``
    shared by both views. ``rotation`` overrides the random transform (pass the
    identity to get two copies of the same roll).
    """
    M = int(M)
    if M < 2:
        raise DataError(f"M must be at least 2, got {M}")
    sd = _check_noise(noise_var)
    s = np.linspace(1.0, 3.0, M)
    h = rng_for(seed, LATENT_STREAM).uniform(0.0, 100.0, size=M)
    R = random_orthonormal(seed) if rotation is None else np.asarray(rotation, dtype=np.float64)
    if R.shape != (3, 3):
        raise DataError(f"rotation must be 3x3, got {R.shape}")
    clean = swiss_roll(s, h)
    X = clean + rng_for(seed, VIEW_STREAM).normal(0.0, 1.0, size=(M, 3)) * sd
    Y = clean @ R.T + rng_for(seed, VIEW_STREAM + 1).normal(0.0, 1.0, size=(M, 3)) * sd
    labels = np.zeros(M, dtype=np.int64)
    latent = {"s": s, "theta": 1.5 * np.pi * s, "h": h, "rotation": R.copy()}
    return _freeze(LabeledViewSet((X, Y), labels, latent, "swiss-rolls"))


def gen_coupled_circles(seed, M=1600, noise_var=0.16):
    """Two concentric circles seen through two distorting views.

    ``theta`` is spread linearly on ``[0, 4 pi]``; the first half of the samples
    has radius 2, the second radius 4. View I shifts ``z[1]`` by 1 on the upper
    half plane, view II shifts ``z[2]`` by 1 on the right half plane. The six
    noise terms per sample are i.i.d. ``N(0, noise_var)``; view I draws
    ``n[1..3]`` from its stream and view II ``n[4..6]`` from its own.
    """
    M = int(M)
    if M < 2 or M % 2:
        raise DataError(f"M must be an even number >= 2, got {M}")
    sd = _check_noise(noise_var)
    theta = np.linspace(0.0, 4.0 * np.pi, M)
    radius = np.where(np.arange(M) < M // 2, 2.0, 4.0)
    z = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    n123 = rng_for(seed, VIEW_STREAM).normal(0.0, 1.0, size=(M, 3)) * sd
    n456 = rng_for(seed, VIEW_STREAM + 1).normal(0.0, 1.0, size=(M, 3)) * sd
    upper = z[:, 1] >= 0
    right = z[:, 0] >= 0
    X = np.column_stack([
        np.where(upper, z[:, 0] + 1.0 + n123[:, 1], z[:, 0] + n123[:, 2]),
        z[:, 1] + n123[:, 0],
    ])
    # the second coordinate uses n[6] in both branches, n[5] is unused
    Y = np.column_stack([
        z[:, 0] + n456[:, 0],
        np.where(right, z[:, 1] + 1.0 + n456[:, 2], z[:, 1] + n456[:, 2]),
    ])
    labels = (radius == 4.0).astype(np.int64)
    latent = {"theta": theta, "radius": radius, "z": z}
    return _freeze(LabeledViewSet((X, Y), labels, latent, "coupled-circles"))


def _helix_params(M):
    M = int(M)
    if M < 2:
        raise DataError(f"M must be at least 2, got {M}")
    a = np.linspace(0.0, 2.0 * np.pi, M)
    b = np.mod(a + 0.5 * np.pi, 2.0 * np.pi)
    return a, b


def gen_helix_a(seed=0, M=1000):
    """Two helices sharing an open circular parameter; view II is shifted by a quarter turn.

    Deterministic; ``seed`` is accepted for a uniform generator signature.
    """
    a, b = _helix_params(M)
    X = np.column_stack([4 * np.cos(0.9 * a) + 0.3 * np.cos(20 * a),
                         4 * np.sin(0.9 * a) + 0.3 * np.sin(20 * a),
                         0.1 * (6.3 * a ** 2 - a ** 3)])
    Y = np.column_stack([4 * np.cos(0.9 * b) + 0.3 * np.cos(20 * b),
                         4 * np.sin(0.9 * b) + 0.3 * np.sin(20 * b),
                         0.1 * (6.3 * b - b ** 2)])
    return _freeze(LabeledViewSet((X, Y), np.zeros(a.size, dtype=np.int64),
                                  {"a": a, "b": b}, "helix-a"))


def gen_helix_b(seed=0, M=1000):
    """Two circular helices (radius 4) with parameters ``a`` and ``b = a + pi/2 mod 2 pi``."""
    a, b = _helix_params(M)
    X = np.column_stack([4 * np.cos(5 * a), 4 * np.sin(5 * a), 4 * a])
    Y = np.column_stack([4 * np.cos(5 * b), 4 * np.sin(5 * b), 4 * b])
    return _freeze(LabeledViewSet((X, Y), np.zeros(a.size, dtype=np.int64),
                                  {"a": a, "b": b}, "helix-b"))


def generate(name, seed, **params):
    """Dispatch by dataset name (see ``DATASETS``)."""
    table = {
        "gaussian-clusters": gen_gaussian_clusters,
        "swiss-rolls": gen_noisy_swiss_rolls,
        "coupled-circles": gen_coupled_circles,
        "helix-a": gen_helix_a,
        "helix-b": gen_helix_b,
    }
    if name not in table:
        raise DataError(f"unknown dataset {name!r}; expected one of {DATASETS}")
    return table[name](seed, **params)
