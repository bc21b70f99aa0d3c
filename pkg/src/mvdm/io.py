"""CSV / JSON input-output with atomic writes, and the model bundle format.

Floats are written with ``%.17g`` so a round trip is exact and repeated runs
produce byte-identical files.
"""

import csv
import json
import os
import shutil
import tempfile

import numpy as np

from .exceptions import DataError
from .spectral import SpectralModel

FLOAT_FMT = "%.17g"
BUNDLE_VERSION = 1


def read_csv(path, header=False):
    """Read a dense numeric CSV into an ``(M, N)`` float array.

    Errors name the file and the 1-based line number.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"{path}: file not found")
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise DataError(f"{path}:{lineno}: expected {width} columns, got {len(rec)}")
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                bad = next(c for c in rec if not _is_float(c))
                raise DataError(f"{path}:{lineno}: non-numeric value {bad.strip()!r}") from None
            for col, v in enumerate(vals):
                if not np.isfinite(v):
                    raise DataError(f"{path}:{lineno}: non-finite value in column {col + 1}")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_views(paths, header=False):
    views = [read_csv(p, header) for p in paths]
    counts = [v.shape[0] for v in views]
    if len(set(counts)) > 1:
        detail = ", ".join(f"{p}: {c}" for p, c in zip(paths, counts))
        raise DataError(f"views have different row counts ({detail})")
    return views


def read_labels(path, header=False):
    A = read_csv(path, header)
    if A.shape[1] != 1:
        A = A[:, -1:]
    lab = A[:, 0]
    if np.any(lab != np.round(lab)):
        raise DataError(f"{path}: labels must be integers")
    return lab.astype(np.int64)


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_csv(A, header=None, index=False):
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    lines = []
    if header is not None:
        lines.append(",".join(header))
    int_like = np.issubdtype(A.dtype, np.integer) or A.dtype == bool
    for i, row in enumerate(A):
        cells = [str(int(v)) for v in row] if int_like else [FLOAT_FMT % v for v in row]
        if index:
            cells.insert(0, str(i))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(path, A, header=None, index=False):
    atomic_write_text(path, format_csv(A, header, index))


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def save_model(directory, model, config, views=()):
    """Write a model bundle: a directory of CSVs plus ``config.json``.

    The directory is assembled next to its destination and renamed into place.
    """
    directory = os.path.abspath(os.fspath(directory))
    parent = os.path.dirname(directory)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".tmp-bundle-", dir=parent)
    try:
        write_csv(os.path.join(tmp, "eigenvalues.csv"), model.eigenvalues)
        write_csv(os.path.join(tmp, "right_vectors.csv"), model.right_vectors)
        write_csv(os.path.join(tmp, "left_vectors.csv"), model.left_vectors)
        write_csv(os.path.join(tmp, "degrees.csv"), model.degrees)
        write_csv(os.path.join(tmp, "trivial.csv"), model.trivial_flags.astype(np.int64))
        for l, V in enumerate(views):
            write_csv(os.path.join(tmp, f"view_{l + 1}.csv"), V)
        cfg = dict(config)
        cfg.update(bundle_version=BUNDLE_VERSION, n_views=model.n_views,
                   n_samples=model.n_samples, residual=model.residual,
                   n_training_views=len(views))
        write_json(os.path.join(tmp, "config.json"), cfg)
        if os.path.exists(directory):
            old = tempfile.mkdtemp(prefix=".old-bundle-", dir=parent)
            os.rmdir(old)
            os.replace(directory, old)
            os.replace(tmp, directory)
            shutil.rmtree(old)
        else:
            os.replace(tmp, directory)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def load_model(directory):
    """Read a bundle written by :func:`save_model`; returns ``(model, config, views)``."""
    directory = os.fspath(directory)
    cfg_path = os.path.join(directory, "config.json")
    if not os.path.isfile(cfg_path):
        raise DataError(f"{directory}: not a model bundle (config.json missing)")
    with open(cfg_path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{cfg_path}: malformed JSON ({exc})") from None

    def vec(name):
        return read_csv(os.path.join(directory, name))[:, 0]

    lam = vec("eigenvalues.csv")
    psi = read_csv(os.path.join(directory, "right_vectors.csv"))
    phi = read_csv(os.path.join(directory, "left_vectors.csv"))
    deg = vec("degrees.csv")
    triv = vec("trivial.csv").astype(bool)
    if psi.shape != phi.shape or psi.shape[1] != lam.size or psi.shape[0] != deg.size:
        raise DataError(f"{directory}: inconsistent bundle array shapes")
    pi = psi * np.sqrt(deg)[:, None]
    for a in (lam, psi, phi, deg, triv, pi):
        a.setflags(write=False)
    model = SpectralModel(lam, psi, phi, pi, triv, deg, int(cfg["n_views"]),
                          int(cfg["n_samples"]), float(cfg.get("residual", 0.0)))
    views = [read_csv(os.path.join(directory, f"view_{l + 1}.csv"))
             for l in range(int(cfg.get("n_training_views", 0)))]
    return model, cfg, views
