"""Dense factorizations used by the solvers.

Cholesky factors are upper triangular throughout: ``G = R.T @ R``.
"""

import math

import numba
import numpy as np
from scipy.linalg import lapack, solve_triangular

from .errors import DowndateFailure, InputError, NotPositiveDefinite, SingularFactor

# None: numerical-rank cutoff, size * machine epsilon
DEFAULT_PINV_TOL = None


def _square(G, name="G"):
    G = np.asarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {G.shape}")
    return G


def cholesky(G):
    """Upper Cholesky factor ``R`` with ``R.T @ R == G``.

    Raises ``NotPositiveDefinite`` with the 0-based index of the failing pivot.
    """
    G = _square(G)
    if G.shape[0] == 0:
        return np.zeros((0, 0))
    R, info = lapack.dpotrf(G, lower=0, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise InputError(f"invalid argument {-info} to dpotrf")
    return R


@numba.njit(nogil=True, cache=True)
def _update(R, x):
    p = x.shape[0]
    for k in range(p):
        rkk = R[k, k]
        xk = x[k]
        r = math.hypot(rkk, xk)
        if r == 0.0:
            continue
        c = rkk / r
        s = xk / r
        R[k, k] = r
        for j in range(k + 1, p):
            rj = R[k, j]
            xj = x[j]
            R[k, j] = c * rj + s * xj
            x[j] = c * xj - s * rj


@numba.njit(nogil=True, cache=True)
def _downdate(R, x):
    # hyperbolic rotations; returns the failing column or -1
    p = x.shape[0]
    for k in range(p):
        rkk = R[k, k]
        xk = x[k]
        r2 = (rkk - xk) * (rkk + xk)
        if not (rkk > 0.0 and r2 > 0.0):
            return k
        r = math.sqrt(r2)
        c = r / rkk
        s = xk / rkk
        R[k, k] = r
        for j in range(k + 1, p):
            rj = (R[k, j] - s * x[j]) / c
            R[k, j] = rj
            x[j] = c * x[j] - s * rj
    return -1


def cholup(R, w, sign="+", overwrite=False):
    """Rank-one update (``sign='+'``) or downdate (``'-'``) of an upper factor.

    Returns ``R'`` with ``R'.T @ R' == R.T @ R +/- outer(w, w)`` in O(p^2).
    The update tolerates zero diagonal entries (bordered factors); the
    downdate raises ``DowndateFailure`` if any pivot would become
    non-positive.
    """
    if overwrite:
        R = np.require(R, dtype=np.float64, requirements=["C", "W"])
    else:
        R = np.array(R, dtype=np.float64, order="C")
    x = np.array(w, dtype=np.float64, copy=True).ravel()
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] != x.shape[0]:
        raise InputError(f"shape mismatch: R {R.shape}, w {x.shape}")
    if sign in ("+", "plus"):
        _update(R, x)
    elif sign in ("-", "minus"):
        k = _downdate(R, x)
        if k >= 0:
            raise DowndateFailure(k)
    else:
        raise InputError(f"sign must be '+' or '-', got {sign!r}")
    return R


def tri_solve(R, b, mode="direct"):
    """Solve with an upper factor: ``R^{-1} b`` (direct) or ``R^{-T} b`` (transposed)."""
    R = _square(R, "R")
    if np.any(np.diag(R) == 0):
        raise SingularFactor("triangular factor has a zero diagonal entry")
    if mode == "direct":
        trans = 0
    elif mode in ("transposed", "transposed-first"):
        trans = 1
    else:
        raise InputError(f"unknown mode {mode!r}")
    return solve_triangular(R, b, trans=trans, lower=False, check_finite=False)


def pinv_solve(G, B, tol=DEFAULT_PINV_TOL):
    """``G^+ B`` for symmetric PSD ``G`` via eigendecomposition.

    Eigenvalues at or below ``tol * max_eigenvalue`` are treated as zero;
    ``tol=None`` uses ``n * eps`` for an ``n x n`` matrix.
    """
    G = _square(G)
    B = np.asarray(B, dtype=np.float64)
    if B.shape[0] != G.shape[0]:
        raise InputError(f"shape mismatch: G {G.shape}, B {B.shape}")
    w, V = np.linalg.eigh(0.5 * (G + G.T))
    top = w[-1] if w.size else 0.0
    if top <= 0:
        return np.zeros_like(B)
    if tol is None:
        tol = G.shape[0] * np.finfo(np.float64).eps
    keep = w > tol * top
    V = V[:, keep]
    coef = V.T @ B
    coef = coef / (w[keep][:, None] if coef.ndim == 2 else w[keep])
    return V @ coef
