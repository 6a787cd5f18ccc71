"""Landmark selection: uniform sampling and leverage-score sampling.

Random streams
--------------
Every random draw goes through :func:`make_rng`, a PCG64 generator seeded by
``SeedSequence(seed, spawn_key=stream)``. ``stream`` is a tuple of small
integers naming the purpose of the draw, e.g. ``(trial, STREAM_LANDMARKS)``.
Distinct streams are statistically independent and the mapping is stable
across numpy versions that keep PCG64/SeedSequence, so results reproduce
across runs, machines and thread counts.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InputError, NotPositiveDefinite, ResourceCapError
from .kernels import as_points, gram_block

DEFAULT_MAX_DENSE_N = 4096

STREAM_SPLIT = 0
STREAM_LANDMARKS = 1
STREAM_RETRAIN = 2
STREAM_PILOT = 3


def make_rng(seed, *stream):
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def check_dense_cap(n, max_dense_n):
    if max_dense_n is not None and n > max_dense_n:
        raise ResourceCapError(
            f"dense {n}x{n} computation exceeds the cap of {max_dense_n}; raise max_dense_n to allow it"
        )


@dataclass(frozen=True)
class LeverageScores:
    """Ridge leverage scores ``l_i(t)``.

    ``T`` is the measured approximation factor ``max_i max(l_hat/l, l/l_hat)``
    for approximate scores validated against exact ones; ``None`` when not
    measured, ``1.0`` for exact scores.
    """

    t: float
    scores: np.ndarray
    exact: bool = True
    T: float = None

    @property
    def probabilities(self):
        total = self.scores.sum()
        if not total > 0:
            raise InputError("leverage scores sum to zero; cannot form sampling probabilities")
        return self.scores / total


def _check_t(t):
    t = float(t)
    if not (np.isfinite(t) and t > 0):
        raise InputError(f"t must be positive, got {t!r}")
    return t


def leverage_scores_exact(X, kernel, t, max_dense_n=DEFAULT_MAX_DENSE_N):
    """Diagonal of ``K_n (K_n + t n I)^{-1}``."""
    X = as_points(X, "X")
    t = _check_t(t)
    n = X.shape[0]
    check_dense_cap(n, max_dense_n)
    K = gram_block(kernel, X, X)
    M = K.copy()
    M[np.diag_indices(n)] += t * n
    # K and M commute, so K M^{-1} = M^{-1} K
    S = np.linalg.solve(M, K)
    scores = np.clip(np.diag(S).copy(), 0.0, 1.0)
    return LeverageScores(t, scores, exact=True, T=1.0)


def approximation_factor(approx, exact):
    """``max_i max(a_i / e_i, e_i / a_i)``; ``inf`` if any score is zero on one side only."""
    a = np.asarray(approx, dtype=np.float64)
    e = np.asarray(exact, dtype=np.float64)
    both_zero = (a == 0) & (e == 0)
    a, e = a[~both_zero], e[~both_zero]
    if a.size == 0:
        return 1.0
    with np.errstate(divide="ignore"):
        ratio = np.maximum(a / e, e / a)
    return float(np.max(ratio))


def leverage_scores_approx(X, kernel, t, sketch_size, rng_seed=0, validate=False,
                           max_dense_n=DEFAULT_MAX_DENSE_N, eig_tol=None):
    """Leverage scores of a Nystrom approximation of ``K_n``.

    A uniform pilot of ``sketch_size`` points gives ``K~ = K_ns K_ss^+ K_sn``;
    the returned scores are the exact ridge leverage scores of ``K~``, computed
    through an ``s x s`` system in O(n s^2). With ``validate=True`` the exact
    scores are also computed (dense, capped) and the factor ``T`` recorded.
    Pilot eigenvalues at or below ``eig_tol * max`` are dropped; the default
    ``sketch_size * eps`` is the usual numerical-rank cutoff.
    """
    X = as_points(X, "X")
    t = _check_t(t)
    n = X.shape[0]
    s = int(sketch_size)
    if s < 1:
        raise InputError(f"sketch_size must be at least 1, got {sketch_size!r}")
    if s > n:
        raise InputError(f"sketch_size {s} exceeds the number of points {n}")
    pilot = np.sort(make_rng(rng_seed, STREAM_PILOT).choice(n, size=s, replace=False))
    Kns = gram_block(kernel, X, X[pilot])
    Kss = Kns[pilot]
    w, Q = np.linalg.eigh(0.5 * (Kss + Kss.T))
    if eig_tol is None:
        eig_tol = s * np.finfo(np.float64).eps
    keep = w > eig_tol * w[-1]
    # K~ = B B^T with B = K_ns Q_k w_k^{-1/2}
    B = (Kns @ Q[:, keep]) / np.sqrt(w[keep])
    M = B.T @ B
    M[np.diag_indices_from(M)] += t * n
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(-1) from None
    Z = solve_triangular(L, B.T, lower=True, check_finite=False)
    scores = np.clip(np.einsum("ij,ij->j", Z, Z), 0.0, 1.0)
    T = None
    if validate:
        T = approximation_factor(scores, leverage_scores_exact(X, kernel, t, max_dense_n).scores)
    return LeverageScores(t, scores, exact=False, T=T)


@dataclass(frozen=True)
class SamplingPlan:
    """How to draw ``m`` landmarks.

    ``strategy`` is ``"plain"`` (uniform, without replacement) or ``"als"``
    (i.i.d. draws from ``probabilities`` with replacement, duplicates removed).
    """

    strategy: str
    m: int
    rng_seed: int = 0
    stream: tuple = ()
    probabilities: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.strategy not in ("plain", "als"):
            raise InputError(f"unknown sampling strategy {self.strategy!r}")
        if int(self.m) < 1:
            raise InputError(f"m must be positive, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "stream", tuple(self.stream))
        if self.strategy == "als":
            if self.probabilities is None:
                raise InputError("ALS sampling requires probabilities")
            p = np.array(self.probabilities, dtype=np.float64).ravel()
            if np.any(p < 0) or not np.all(np.isfinite(p)):
                raise InputError("sampling probabilities must be finite and nonnegative")
            if abs(p.sum() - 1.0) > 1e-12:
                raise InputError(f"sampling probabilities sum to {p.sum()!r}, not 1")
            p.setflags(write=False)
            object.__setattr__(self, "probabilities", p)

    def with_stream(self, *stream, m=None):
        return SamplingPlan(self.strategy, self.m if m is None else m, self.rng_seed,
                            stream, self.probabilities)


def als_plan(scores, m, rng_seed=0, stream=()):
    """Sampling plan with ``P(i) = l_i / sum_j l_j``."""
    s = scores.scores if isinstance(scores, LeverageScores) else np.asarray(scores, dtype=np.float64)
    total = s.sum()
    if not total > 0:
        raise InputError("leverage scores sum to zero")
    return SamplingPlan("als", m, rng_seed, stream, s / total)


def sample_sequence(plan, n):
    """Landmark indices in draw order and the draw position of each.

    For ALS the ``m`` draws are made with replacement and only first
    occurrences kept, so ``positions`` is increasing and the distinct
    landmarks among the first ``k`` draws are the first
    ``searchsorted(positions, k)`` indices.
    """
    rng = make_rng(plan.rng_seed, *plan.stream)
    if plan.strategy == "plain":
        if plan.m > n:
            raise InputError(f"cannot draw {plan.m} distinct landmarks from {n} points")
        return rng.permutation(n)[: plan.m], np.arange(plan.m)
    p = plan.probabilities
    if p.shape[0] != n:
        raise InputError(f"plan has {p.shape[0]} probabilities for {n} points")
    draws = rng.choice(n, size=plan.m, replace=True, p=p)
    _, first = np.unique(draws, return_index=True)
    positions = np.sort(first)
    return draws[positions], positions


def sample_indices(plan, n):
    """Landmark indices into a training set of size ``n``, in draw order."""
    return sample_sequence(plan, n)[0]


def sample_landmarks(plan, X):
    """Draw landmarks from the rows of ``X``; returns ``(landmarks, indices)``."""
    X = as_points(X, "X")
    idx = sample_indices(plan, X.shape[0])
    return X[idx].copy(), idx


def write_scores_csv(scores, path, comments=()):
    with open(path, "w", newline="") as f:
        for line in comments:
            f.write(f"# {line}\n")
        w = csv.writer(f)
        w.writerow(["index", "score"])
        for i, v in enumerate(scores.scores):
            w.writerow([i, format(float(v), ".17g")])
