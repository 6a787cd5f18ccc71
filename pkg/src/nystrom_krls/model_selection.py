"""Hold-out model selection over the subsampling level ``m`` and ``lam``.

Each trial splits the training part into a fit set and a validation set,
draws one landmark sequence of length ``max(m_grid)`` from the fit set, and
runs one incremental path per ``lam``; the validation error at every ``m`` in
the grid is read off the path. The winning ``(m, lam)`` minimizes the mean
validation error across trials, ties going to the smaller ``m`` and then the
smaller ``lam``. The winner is refit on the whole training part with a fresh
landmark draw and scored on the test part.
"""

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, InputError
from .incremental import run_path
from .kernels import gram_block
from .solvers import check_training_data, predict
from .subsampling import (
    DEFAULT_MAX_DENSE_N,
    STREAM_LANDMARKS,
    STREAM_RETRAIN,
    STREAM_SPLIT,
    SamplingPlan,
    als_plan,
    leverage_scores_approx,
    leverage_scores_exact,
    make_rng,
    sample_sequence,
)

MIN_COUPLED_LAMBDA = 1e-15
METRICS = ("rmse", "zero_one")


def _pair(pred, y):
    pred, y = np.asarray(pred, dtype=np.float64).ravel(), np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] == 0:
        raise InputError("cannot evaluate on an empty set")
    if pred.shape != y.shape:
        raise InputError(f"{pred.shape[0]} predictions for {y.shape[0]} targets")
    return pred, y


def rmse(pred, y):
    pred, y = _pair(pred, y)
    r = pred - y
    # fsum makes the result independent of point order
    return math.sqrt(math.fsum(r * r) / r.shape[0])


def zero_one(pred, y):
    pred, y = _pair(pred, y)
    if not np.all(np.abs(y) == 1):
        raise InputError("zero_one error needs labels in {-1, +1}")
    sign = np.where(pred >= 0, 1.0, -1.0)
    return float(np.count_nonzero(sign != y)) / y.shape[0]


def score(pred, y, metric="rmse"):
    if metric == "rmse":
        return rmse(pred, y)
    if metric == "zero_one":
        return zero_one(pred, y)
    raise InputError(f"unknown metric {metric!r}")


def evaluate(model, X, y, metric="rmse"):
    """Test error of ``model``: RMSE, or the sign-mismatch rate against +-1 labels."""
    return score(predict(model, X), y, metric)


def log_grid(lo, hi, num):
    return [float(v) for v in np.logspace(np.log10(lo), np.log10(hi), int(num))]


def lin_grid(lo, hi, num):
    return [int(v) for v in np.unique(np.round(np.linspace(lo, hi, int(num))).astype(int))]


def log_coupling(m):
    """``lam(m) = log(m) / m``."""
    return math.log(m) / m


@dataclass(frozen=True)
class Strategy:
    """Landmark sampling template: ``plain`` or ``als`` (scores at ``t``; approximate if ``sketch_size``)."""

    kind: str = "plain"
    t: float = None
    sketch_size: int = None
    max_dense_n: int = DEFAULT_MAX_DENSE_N

    def __post_init__(self):
        if self.kind not in ("plain", "als"):
            raise ConfigError(f"unknown sampling strategy {self.kind!r}")
        if self.kind == "als" and not (self.t is not None and self.t > 0):
            raise ConfigError("ALS sampling needs a positive t")

    def plan(self, X, kernel, m, seed, stream):
        if self.kind == "plain":
            return SamplingPlan("plain", m, seed, stream)
        if self.sketch_size is None:
            scores = leverage_scores_exact(X, kernel, self.t, self.max_dense_n)
        else:
            scores = leverage_scores_approx(X, kernel, self.t, min(self.sketch_size, X.shape[0]),
                                            seed, max_dense_n=self.max_dense_n)
        return als_plan(scores, m, seed, stream)


@dataclass(frozen=True)
class GridSpec:
    lambdas: tuple
    ms: tuple
    holdout_fraction: float = 0.2
    trials: int = 1
    base_seed: int = 0
    metric: str = "rmse"

    def __post_init__(self):
        lambdas = tuple(float(v) for v in self.lambdas)
        ms = tuple(int(v) for v in self.ms)
        if not lambdas or not ms:
            raise ConfigError("lambda and m grids must be nonempty")
        if any(v <= 0 or not math.isfinite(v) for v in lambdas):
            raise ConfigError("lambda grid values must be positive")
        if any(v < 1 for v in ms):
            raise ConfigError("m grid values must be positive integers")
        if list(lambdas) != sorted(set(lambdas)) or list(ms) != sorted(set(ms)):
            raise ConfigError("grids must be strictly ascending")
        if not 0 < self.holdout_fraction < 1:
            raise ConfigError("holdout_fraction must lie in (0, 1)")
        if int(self.trials) < 1:
            raise ConfigError("trials must be positive")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "ms", ms)
        object.__setattr__(self, "trials", int(self.trials))


@dataclass(frozen=True)
class Cell:
    trial: int
    m: int
    lam: float
    level: int
    val_error: float
    fit_time: float


@dataclass
class GridReport:
    cells: list
    winner: tuple
    mean_errors: dict
    metric: str
    test_errors: list = field(default_factory=list)
    recoveries: int = 0
    models: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def test_mean(self):
        return float(np.mean(self.test_errors)) if self.test_errors else None

    @property
    def test_std(self):
        return float(np.std(self.test_errors)) if self.test_errors else None

    def summary(self):
        m, lam = self.winner
        return {
            "winner": {"m": m, "lambda": lam, "mean_val_error": self.mean_errors[(m, lam)]},
            "metric": self.metric,
            "test": None if not self.test_errors else {
                "mean": self.test_mean, "std": self.test_std, "per_trial": list(self.test_errors)},
            "recoveries": self.recoveries,
            "metadata": self.metadata,
        }

    def write_surface_csv(self, path, provenance=None):
        with open(path, "w", newline="") as f:
            if provenance is not None:
                f.write("# config: " + json.dumps(provenance, sort_keys=True) + "\n")
            w = csv.writer(f)
            w.writerow(["trial", "m", "lambda", "level", "val_error", "fit_time"])
            for c in self.cells:
                w.writerow([c.trial, c.m, repr(c.lam), c.level, format(c.val_error, ".17g"),
                            format(c.fit_time, ".6g")])

    def write_summary_json(self, path, provenance=None):
        out = self.summary()
        if provenance is not None:
            out = {"config": provenance, **out}
        with open(path, "w") as f:
            json.dump(out, f, indent=2, sort_keys=True)


def holdout_split(n, fraction, rng):
    """``(fit_idx, val_idx)`` with ``round(fraction * n)`` validation points (at least one each side)."""
    if n < 2:
        raise InputError("need at least two points for a hold-out split")
    n_val = min(max(1, int(round(fraction * n))), n - 1)
    perm = rng.permutation(n)
    return perm[n_val:], perm[:n_val]


def _draw_landmarks(Xfit, kernel, strategy, m_max, seed, stream):
    """Landmark sequence and, for each requested ``m``, the prefix length it maps to."""
    plan = strategy.plan(Xfit, kernel, m_max, seed, stream)
    idx, positions = sample_sequence(plan, Xfit.shape[0])
    return idx, lambda m: int(np.searchsorted(positions, m))


def _trial_data(X, y, kernel, strategy, holdout, m_max, seed, trial):
    fit, val = holdout_split(X.shape[0], holdout, make_rng(seed, trial, STREAM_SPLIT))
    Xf, yf, Xv, yv = X[fit], y[fit], X[val], y[val]
    idx, level_of = _draw_landmarks(Xf, kernel, strategy, m_max, seed, (trial, STREAM_LANDMARKS))
    L = Xf[idx]
    return {
        "Xf": Xf, "yf": yf, "yv": yv, "L": L, "level_of": level_of,
        "columns": np.asfortranarray(gram_block(kernel, Xf, L)),
        "landmark_gram": gram_block(kernel, L, L),
        "val_columns": gram_block(kernel, Xv, L),
    }


def _run_task(td, kernel, lam, ms, metric, trial):
    """One path at ``lam``; validation error at each ``m`` in ``ms``."""
    level_for = {m: td["level_of"](m) for m in ms}
    levels = sorted({t for t in level_for.values() if t >= 1})
    errs = {}

    def emit(t, model, elapsed):
        pred = td["val_columns"][:, :t] @ model.alpha
        errs[t] = (score(pred, td["yv"], metric), elapsed)

    res = run_path(td["Xf"], td["yf"], kernel, lam, td["L"], levels=levels, emit=emit,
                   columns=td["columns"], landmark_gram=td["landmark_gram"])
    cells = []
    for m in ms:
        t = level_for[m]
        err, elapsed = errs[t]
        cells.append(Cell(trial, m, lam, t, err, elapsed))
    return cells, res.recoveries


def _select(cells, ms_lams):
    sums = {}
    for c in cells:
        sums.setdefault((c.m, c.lam), []).append(c.val_error)
    mean_errors = {k: math.fsum(v) / len(v) for k, v in sums.items()}
    winner = min(ms_lams, key=lambda k: (mean_errors[k], k[0], k[1]))
    return winner, mean_errors


def _search(X, y, kernel, tasks, trials, holdout, base_seed, metric, strategy, n_jobs,
            X_test, y_test):
    X, y = check_training_data(X, y)
    strategy = strategy or Strategy()
    m_max = max(m for _, ms in tasks for m in ms)
    n_fit = X.shape[0] - min(max(1, int(round(holdout * X.shape[0]))), X.shape[0] - 1)
    if strategy.kind == "plain" and m_max > n_fit:
        raise InputError(f"largest m = {m_max} exceeds the {n_fit} points of the fit split")

    def prepare(trial):
        return _trial_data(X, y, kernel, strategy, holdout, m_max, base_seed, trial)

    units = [(trial, i) for trial in range(trials) for i in range(len(tasks))]
    with ThreadPoolExecutor(max_workers=max(1, n_jobs)) as ex:
        tds = list(ex.map(prepare, range(trials)))
        outs = list(ex.map(
            lambda u: _run_task(tds[u[0]], kernel, tasks[u[1]][0], tasks[u[1]][1], metric, u[0]), units))
    cells = sorted((c for cs, _ in outs for c in cs), key=lambda c: (c.trial, c.lam, c.m))
    recoveries = sum(r for _, r in outs)
    ms_lams = sorted({(c.m, c.lam) for c in cells})
    winner, mean_errors = _select(cells, ms_lams)
    report = GridReport(cells, winner, mean_errors, metric, recoveries=recoveries)

    m_star, lam_star = winner
    for trial in range(trials):
        idx, level_of = _draw_landmarks(X, kernel, strategy, m_star, base_seed, (trial, STREAM_RETRAIN))
        t = level_of(m_star)
        model = run_path(X, y, kernel, lam_star, X[idx], levels=[t]).models[0]
        report.models.append(model)
        if X_test is not None:
            report.test_errors.append(evaluate(model, X_test, y_test, metric))
    return report


def run_grid(X, y, kernel, grid, strategy=None, n_jobs=1, X_test=None, y_test=None):
    """Hold-out search over ``grid.ms x grid.lambdas`` with one path per ``lam`` and trial."""
    tasks = [(lam, list(grid.ms)) for lam in grid.lambdas]
    report = _search(X, y, kernel, tasks, grid.trials, grid.holdout_fraction, grid.base_seed,
                     grid.metric, strategy, n_jobs, X_test, y_test)
    report.metadata["mode"] = "grid"
    return report


def run_m_regularized(X, y, kernel, ms, coupling=log_coupling, trials=1, holdout_fraction=0.2,
                      base_seed=0, metric="rmse", strategy=None, n_jobs=1, X_test=None, y_test=None,
                      min_lambda=MIN_COUPLED_LAMBDA):
    """Select ``m`` alone, with ``lam = max(coupling(m), min_lambda)``.

    Levels sharing a coupled ``lam`` share one path, so a constant coupling
    reproduces :func:`run_grid` restricted to that ``lam`` exactly.
    """
    grid = GridSpec([1.0], ms, holdout_fraction, trials, base_seed, metric)
    groups = {}
    for m in grid.ms:
        groups.setdefault(max(float(coupling(m)), min_lambda), []).append(m)
    tasks = sorted(groups.items())
    report = _search(X, y, kernel, tasks, grid.trials, holdout_fraction, base_seed, metric,
                     strategy, n_jobs, X_test, y_test)
    report.metadata["mode"] = "m_regularized"
    return report


def cell_rows(report):
    return [asdict(c) for c in report.cells]
