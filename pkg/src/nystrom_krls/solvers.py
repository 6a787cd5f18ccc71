"""Exact and batch Nystrom kernel regularized least squares.

Both solvers minimize ``(1/n) sum_i (f(x_i) - y_i)^2 + lam ||f||_H^2``; the
exact one over the span of all training points, the Nystrom one over the span
of ``m`` landmark points.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernels import KernelSpec, as_points, gram_block
from .linalg import DEFAULT_PINV_TOL, cholesky, pinv_solve, tri_solve


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def check_training_data(X, y):
    X = as_points(X, "X")
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise InputError("training set is empty")
    if y.shape[0] != X.shape[0]:
        raise InputError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("training data contains NaN or Inf")
    return X, y


def _check_lambda(lam, allow_zero=False):
    lam = float(lam)
    ok = lam >= 0 if allow_zero else lam > 0
    if not (np.isfinite(lam) and ok):
        raise InputError(f"regularization parameter must be positive, got {lam!r}")
    return lam


@dataclass(frozen=True)
class NystromModel:
    """``f(x) = sum_j alpha_j k(landmarks_j, x)``."""

    landmarks: np.ndarray
    alpha: np.ndarray
    kernel: KernelSpec
    lam: float

    def __post_init__(self):
        landmarks = _frozen(as_points(self.landmarks, "landmarks"))
        alpha = _frozen(np.ravel(self.alpha))
        if alpha.shape[0] != landmarks.shape[0]:
            raise InputError(f"{landmarks.shape[0]} landmarks but {alpha.shape[0]} coefficients")
        if not np.all(np.isfinite(alpha)):
            raise InputError("non-finite coefficients")
        object.__setattr__(self, "landmarks", landmarks)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def m(self):
        return self.landmarks.shape[0]

    @property
    def centers(self):
        return self.landmarks


@dataclass(frozen=True)
class ExactModel:
    """Full KRLS solution ``f(x) = sum_i alpha_i k(x_i, x)`` over the training inputs."""

    points: np.ndarray
    alpha: np.ndarray
    kernel: KernelSpec
    lam: float

    def __post_init__(self):
        points = _frozen(as_points(self.points, "points"))
        alpha = _frozen(np.ravel(self.alpha))
        if alpha.shape[0] != points.shape[0]:
            raise InputError(f"{points.shape[0]} points but {alpha.shape[0]} coefficients")
        if not np.all(np.isfinite(alpha)):
            raise InputError("non-finite coefficients")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def centers(self):
        return self.points


def fit_exact(X, y, kernel, lam):
    """Solve ``(K_n + lam n I) alpha = y`` by Cholesky."""
    X, y = check_training_data(X, y)
    lam = _check_lambda(lam)
    n = X.shape[0]
    K = gram_block(kernel, X, X)
    K[np.diag_indices(n)] += lam * n
    R = cholesky(K)
    alpha = tri_solve(R, tri_solve(R, y, "transposed"), "direct")
    return ExactModel(X, alpha, kernel, lam)


def nystrom_system(Knm, Kmm, y, lam):
    """Normal matrix ``K_nm^T K_nm + lam n K_mm`` and right side ``K_nm^T y``."""
    n = Knm.shape[0]
    return Knm.T @ Knm + (lam * n) * Kmm, Knm.T @ y


def fit_nystrom_batch(X, y, landmarks, kernel, lam, tol=DEFAULT_PINV_TOL):
    """Nystrom KRLS from scratch: ``alpha = (K_nm^T K_nm + lam n K_mm)^+ K_nm^T y``."""
    X, y = check_training_data(X, y)
    lam = _check_lambda(lam)
    landmarks = as_points(landmarks, "landmarks")
    if landmarks.shape[0] == 0:
        raise InputError("empty landmark set")
    if landmarks.shape[1] != X.shape[1]:
        raise InputError(f"dimension mismatch: landmarks {landmarks.shape[1]} vs data {X.shape[1]}")
    Knm = gram_block(kernel, X, landmarks)
    Kmm = gram_block(kernel, landmarks, landmarks)
    G, rhs = nystrom_system(Knm, Kmm, y, lam)
    alpha = pinv_solve(G, rhs, tol)
    return NystromModel(landmarks, alpha, kernel, lam)


def predict(model, points):
    points = as_points(points, "points")
    if points.shape[1] != model.centers.shape[1]:
        raise InputError(
            f"dimension mismatch: model has {model.centers.shape[1]} features, got {points.shape[1]}"
        )
    return gram_block(model.kernel, points, model.centers) @ model.alpha


def rkhs_norm_sq(model):
    """``||f||_H^2 = alpha^T K alpha`` over the model's centers."""
    K = gram_block(model.kernel, model.centers, model.centers)
    return float(model.alpha @ K @ model.alpha)


def objective(model, X, y, lam=None):
    """Regularized empirical risk of ``model`` on ``(X, y)``."""
    X, y = check_training_data(X, y)
    lam = model.lam if lam is None else lam
    r = predict(model, X) - y
    return float(np.mean(r * r) + lam * rkhs_norm_sq(model))


def model_to_dict(model):
    kind = "nystrom" if isinstance(model, NystromModel) else "exact"
    return {
        "kind": kind,
        "kernel": model.kernel.to_dict(),
        "lambda": model.lam,
        "m": int(model.centers.shape[0]),
        "centers": model.centers.tolist(),
        "alpha": model.alpha.tolist(),
    }


def model_from_dict(d):
    kernel = KernelSpec.from_dict(d["kernel"])
    centers = np.asarray(d["centers"], dtype=np.float64)
    if centers.ndim != 2 or centers.shape[0] != d["m"]:
        raise InputError("serialized model: center matrix does not match m")
    cls = NystromModel if d.get("kind", "nystrom") == "nystrom" else ExactModel
    return cls(centers, np.asarray(d["alpha"], dtype=np.float64), kernel, d["lambda"])


def save_model(model, path, metadata=None):
    # json writes floats with repr(), which round-trips exactly
    d = model_to_dict(model)
    if metadata is not None:
        d["metadata"] = metadata
    with open(path, "w") as f:
        json.dump(d, f)


def load_model(path):
    with open(path) as f:
        return model_from_dict(json.load(f))
