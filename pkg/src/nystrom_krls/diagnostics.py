"""Empirical effective dimension ``N(lam) = tr(K_n (K_n + lam n I)^{-1})``."""

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernels import as_points, gram_block
from .subsampling import DEFAULT_MAX_DENSE_N, check_dense_cap


@dataclass(frozen=True)
class EffectiveDimension:
    lam: float
    value: float


def kernel_spectrum(X, kernel, max_dense_n=DEFAULT_MAX_DENSE_N):
    """Eigenvalues of ``K_n``, clipped at zero."""
    X = as_points(X, "X")
    check_dense_cap(X.shape[0], max_dense_n)
    return np.clip(np.linalg.eigvalsh(gram_block(kernel, X, X)), 0.0, None)


def _from_spectrum(w, lam, n):
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise InputError(f"lambda must be positive, got {lam!r}")
    return EffectiveDimension(lam, float(np.sum(w / (w + lam * n))))


def effective_dimension(X, kernel, lam, max_dense_n=DEFAULT_MAX_DENSE_N):
    w = kernel_spectrum(X, kernel, max_dense_n)
    return _from_spectrum(w, lam, w.shape[0])


def effective_dimension_table(X, kernel, lambdas, max_dense_n=DEFAULT_MAX_DENSE_N):
    """``N(lam)`` for every ``lam`` in ``lambdas`` from a single eigendecomposition."""
    w = kernel_spectrum(X, kernel, max_dense_n)
    return [_from_spectrum(w, lam, w.shape[0]) for lam in lambdas]
