"""Incremental Nystrom KRLS over growing landmark sets.

For landmarks ``x~_1, ..., x~_m`` and fixed ``lam`` the solver keeps an upper
Cholesky factor ``R_t`` of

    G_t = A_t^T A_t + lam n K_tt,    A_t = [k(x_i, x~_j)]  (n x t)

When landmark ``t`` arrives, ``G_t`` is ``G_{t-1}`` bordered by the column
``c_t = A_{t-1}^T a_t + lam n b_t`` and the corner ``gamma_t = a_t^T a_t + lam n``.
The border splits as ``u u^T - v v^T`` with

    g = sqrt(1 + gamma_t),  u = (c_t / (1 + g), g),  v = (c_t / (1 + g), -1)

so ``R_t`` is the zero-padded ``R_{t-1}`` after one rank-one update and one
downdate, O(t^2) work. With ``A_t^T y`` kept up to date, the coefficients at
level ``t`` are two triangular solves. The whole path to ``m`` costs
O(n m^2 + m^3), against O(n m^2 T + m^3 T) for refitting ``T`` levels.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NotPositiveDefinite
from .kernels import as_points, gram_block
from .linalg import _downdate, _update, cholesky, tri_solve
from .solvers import NystromModel, _check_lambda, check_training_data, fit_nystrom_batch

log = logging.getLogger(__name__)

REFACTOR_JITTER = 1e-10


def border_vectors(c, gamma):
    """``(u, v)`` with ``u u^T - v v^T == [[0, c], [c^T, gamma]]``."""
    c = np.asarray(c, dtype=np.float64).ravel()
    g = np.sqrt(1.0 + gamma)
    head = c / (1.0 + g)
    return np.append(head, g), np.append(head, -1.0)


@dataclass
class CholeskyPathState:
    """Mutable solver state at level ``t``.

    ``A`` and ``Ktt`` are views into buffers that grow geometrically.
    """

    X: np.ndarray
    y: np.ndarray
    kernel: object
    lam: float
    R: np.ndarray
    Aty: np.ndarray
    landmarks: list
    recoveries: int = 0
    check: bool = False
    max_factor_error: float = 0.0
    _A: np.ndarray = field(default=None, repr=False)
    _K: np.ndarray = field(default=None, repr=False)

    @property
    def t(self):
        return self.R.shape[0]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def A(self):
        return self._A[:, : self.t]

    @property
    def Ktt(self):
        return self._K[: self.t, : self.t]

    def gram(self, t=None):
        """``G_t`` assembled directly (for checks and refactorization)."""
        t = self.t if t is None else t
        A = self._A[:, :t]
        return A.T @ A + (self.lam * self.n) * self._K[:t, :t]

    def alpha(self):
        return tri_solve(self.R, tri_solve(self.R, self.Aty, "transposed"), "direct")

    def model(self, alpha=None):
        alpha = self.alpha() if alpha is None else alpha
        return NystromModel(np.array(self.landmarks), alpha, self.kernel, self.lam)

    def _reserve(self, t):
        cap = self._A.shape[1]
        if t <= cap:
            return
        new = max(t, 2 * cap)
        A = np.zeros((self.n, new), order="F")
        A[:, :cap] = self._A
        K = np.zeros((new, new))
        K[:cap, :cap] = self._K
        self._A, self._K = A, K

    def _check_factor(self):
        G = self.gram()
        err = np.linalg.norm(self.R.T @ self.R - G) / np.linalg.norm(G)
        self.max_factor_error = max(self.max_factor_error, float(err))


def path_init(X, y, kernel, lam, first_landmark, column=None, capacity=16, check=False):
    """Level-1 state: ``R_1 = sqrt(gamma_1)``, ``A_1 = a_1``.

    ``column`` may carry the precomputed ``a_1 = k(X, x~_1)``.
    """
    X, y = check_training_data(X, y)
    lam = _check_lambda(lam)
    x1 = as_points(first_landmark, "landmark")[0]
    if x1.shape[0] != X.shape[1]:
        raise InputError(f"dimension mismatch: landmark {x1.shape[0]} vs data {X.shape[1]}")
    n = X.shape[0]
    a = gram_block(kernel, X, x1[None, :])[:, 0] if column is None else np.asarray(column, dtype=np.float64)
    kself = 1.0  # Gaussian: k(x, x) = 1
    gamma = float(a @ a + lam * n * kself)
    assert gamma > 0, "gamma_1 must be positive for lam > 0"
    capacity = max(1, int(capacity))
    A = np.zeros((n, capacity), order="F")
    A[:, 0] = a
    K = np.zeros((capacity, capacity))
    K[0, 0] = kself
    state = CholeskyPathState(X, y, kernel, lam, np.array([[np.sqrt(gamma)]]),
                              np.array([a @ y]), [x1.copy()], check=check, _A=A, _K=K)
    if check:
        state._check_factor()
    return state


def _refactor(G):
    try:
        return cholesky(G), False
    except NotPositiveDefinite:
        pass
    t = G.shape[0]
    jitter = REFACTOR_JITTER * np.trace(G) / t
    for _ in range(8):
        try:
            return cholesky(G + jitter * np.eye(t)), True
        except NotPositiveDefinite:
            jitter *= 10.0
    raise NotPositiveDefinite(t - 1)


def path_step(state, new_landmark, column=None, cross=None, solve=True):
    """Add one landmark; returns ``(state, alpha_t)`` (``alpha_t`` is None if not ``solve``).

    ``state`` is updated in place. ``column`` and ``cross`` may carry the
    precomputed ``a_t = k(X, x~_t)`` and ``b_t = k(x~_t, x~_{1..t-1})``. If the
    downdate breaks down numerically, ``G_t`` is refactored from scratch and
    ``state.recoveries`` incremented.
    """
    x = as_points(new_landmark, "landmark")[0]
    if x.shape[0] != state.X.shape[1]:
        raise InputError(f"dimension mismatch: landmark {x.shape[0]} vs data {state.X.shape[1]}")
    t_prev = state.t
    t = t_prev + 1
    lamn = state.lam * state.n
    if column is None:
        column = gram_block(state.kernel, state.X, x[None, :])[:, 0]
    if cross is None:
        cross = gram_block(state.kernel, np.array(state.landmarks), x[None, :])[:, 0]
    a = np.asarray(column, dtype=np.float64)
    b = np.asarray(cross, dtype=np.float64)

    c = state.A.T @ a + lamn * b
    gamma = float(a @ a + lamn)
    assert gamma > 0
    u, v = border_vectors(c, gamma)

    state._reserve(t)
    state._A[:, t_prev] = a
    state._K[t_prev, :t_prev] = b
    state._K[:t_prev, t_prev] = b
    state._K[t_prev, t_prev] = 1.0
    state.landmarks.append(x.copy())
    state.Aty = np.append(state.Aty, a @ state.y)

    R = np.zeros((t, t))
    R[:t_prev, :t_prev] = state.R
    _update(R, u)
    if _downdate(R, v) >= 0:
        R, jittered = _refactor(state.gram(t))
        state.recoveries += 1
        log.debug("downdate failed at level %d; refactored (jitter=%s)", t, jittered)
    state.R = R
    if state.check:
        state._check_factor()
    return state, (state.alpha() if solve else None)


@dataclass
class PathResult:
    """Models at the requested levels plus solver statistics."""

    levels: list
    models: list
    times: list
    recoveries: int
    max_factor_error: float = 0.0


def run_path(X, y, kernel, lam, landmarks, levels=None, emit=None, columns=None,
             landmark_gram=None, check=False):
    """Nystrom solutions for every prefix of ``landmarks`` listed in ``levels``.

    ``levels`` defaults to ``1..m``. ``emit(t, model, elapsed)`` is called at
    each of those levels, ``elapsed`` being seconds since the path started.
    ``columns`` (``k(X, landmarks)``, n x m) and ``landmark_gram`` (m x m) let
    several paths at different ``lam`` share kernel evaluations.
    """
    start = time.perf_counter()
    landmarks = as_points(landmarks, "landmarks")
    m = landmarks.shape[0]
    if m == 0:
        raise InputError("landmark sequence is empty")
    X, y = check_training_data(X, y)
    wanted = set(range(1, m + 1)) if levels is None else {int(t) for t in levels}
    if not wanted or min(wanted) < 1 or max(wanted) > m:
        raise InputError(f"levels must lie in [1, {m}]")
    if columns is None:
        columns = gram_block(kernel, X, landmarks)
    if landmark_gram is None:
        landmark_gram = gram_block(kernel, landmarks, landmarks)
    top = max(wanted)
    result = PathResult([], [], [], 0)

    def record(state, t, alpha):
        model = NystromModel(landmarks[:t], alpha, kernel, state.lam)
        elapsed = time.perf_counter() - start
        result.levels.append(t)
        result.models.append(model)
        result.times.append(elapsed)
        if emit is not None:
            emit(t, model, elapsed)

    state = path_init(X, y, kernel, lam, landmarks[0], column=columns[:, 0], capacity=top, check=check)
    if 1 in wanted:
        record(state, 1, state.alpha())
    for t in range(2, top + 1):
        _, alpha = path_step(state, landmarks[t - 1], column=columns[:, t - 1],
                             cross=landmark_gram[t - 1, : t - 1], solve=t in wanted)
        if alpha is not None:
            record(state, t, alpha)
    result.recoveries = state.recoveries
    result.max_factor_error = state.max_factor_error
    return result


def naive_path(X, y, kernel, lam, landmarks, levels):
    """Refit from scratch at every level; the baseline the incremental path beats."""
    landmarks = as_points(landmarks, "landmarks")
    return [fit_nystrom_batch(X, y, landmarks[:t], kernel, lam) for t in levels]
