"""Gaussian kernel evaluation and kernel-matrix block assembly.

The Gaussian convention is ``k(x, y) = exp(-||x - y||^2 / (2 sigma^2))``, so
``k(x, x) = 1`` and every entry lies in ``(0, 1]``.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .errors import InputError

FAMILIES = ("gaussian",)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and its hyperparameters."""

    sigma: float
    family: str = "gaussian"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown kernel family {self.family!r}")
        sigma = float(self.sigma)
        if not (math.isfinite(sigma) and sigma > 0):
            raise InputError(f"kernel width must be positive and finite, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    def to_dict(self):
        return {"family": self.family, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d):
        return cls(sigma=d["sigma"], family=d.get("family", "gaussian"))


def as_points(x, name="points"):
    """Coerce ``x`` to a C-contiguous float64 (n, d) array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D array of feature vectors")
    return np.ascontiguousarray(arr)


@numba.njit(nogil=True, cache=True)
def _gaussian_block(rows, cols, scale, out):
    # Per-entry sum over features in fixed order; (a - b)**2 == (b - a)**2
    # bitwise, so the block for (B, A) is exactly the transpose of (A, B).
    n, d = rows.shape
    m = cols.shape[0]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                diff = rows[i, k] - cols[j, k]
                s += diff * diff
            out[i, j] = math.exp(-s * scale)


def evaluate(spec, x, y):
    """Kernel value between two feature vectors."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(gram_block(spec, x[None, :], y[None, :])[0, 0])


def gram_block(spec, rows, cols, n_jobs=1, chunk=1024):
    """Kernel matrix with entry ``(i, j) = k(rows[i], cols[j])``.

    Rows are split into chunks of at most ``chunk`` and may be assembled by
    ``n_jobs`` threads; every entry is computed by the same sequential
    reduction, so the result does not depend on ``n_jobs`` or ``chunk``.
    """
    rows = as_points(rows, "rows")
    cols = as_points(cols, "cols")
    if rows.shape[1] != cols.shape[1]:
        raise InputError(f"dimension mismatch: {rows.shape[1]} vs {cols.shape[1]}")
    scale = 0.5 / (spec.sigma * spec.sigma)
    out = np.empty((rows.shape[0], cols.shape[0]))
    if rows.shape[0] == 0 or cols.shape[0] == 0:
        return out
    bounds = [(s, min(s + chunk, rows.shape[0])) for s in range(0, rows.shape[0], chunk)]

    def work(b):
        _gaussian_block(rows[b[0]:b[1]], cols, scale, out[b[0]:b[1]])

    if n_jobs > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            list(ex.map(work, bounds))
    else:
        for b in bounds:
            work(b)
    return out
