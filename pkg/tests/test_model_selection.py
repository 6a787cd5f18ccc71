import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import synthetic
from nystrom_krls import (ConfigError, GridSpec, InputError, KernelSpec, Strategy, evaluate_model,
                          fit_nystrom_batch, predict, run_grid, run_m_regularized)
from nystrom_krls.model_selection import (holdout_split, lin_grid, log_coupling, log_grid, rmse, score,
                                          zero_one)
from nystrom_krls.subsampling import STREAM_LANDMARKS, STREAM_SPLIT, make_rng, sample_sequence, SamplingPlan

K1 = KernelSpec(1.0)


def test_rmse_hand_computed():
    y = np.arange(10.0)
    r = np.array([1, -1, 2, 0, 0, 3, -2, 1, 0, 1], dtype=float)
    assert rmse(y + r, y) == pytest.approx(math.sqrt(21 / 10), abs=1e-12)
    assert rmse(y, y) == 0.0


def test_zero_one():
    y = np.array([1.0, -1.0, -1.0, 1.0, -1.0])
    assert zero_one(np.zeros(5), y) == pytest.approx(3 / 5)
    assert zero_one(y * 0.3, y) == 0.0
    assert zero_one(-y, y) == 1.0
    with pytest.raises(InputError):
        score(np.zeros(2), np.array([0.5, 1.0]), "zero_one")
    with pytest.raises(InputError):
        score(np.zeros(2), np.ones(2), "mae")
    with pytest.raises(InputError):
        rmse(np.zeros(0), np.zeros(0))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_metric_permutation_invariant(n, seed):
    rng = np.random.default_rng(seed)
    p, y = rng.standard_normal(n), rng.standard_normal(n)
    perm = rng.permutation(n)
    assert rmse(p[perm], y[perm]) == rmse(p, y)


def test_evaluate_model():
    X, y = synthetic(30, 2, seed=0)
    model = fit_nystrom_batch(X, y, X[:5], K1, 1e-3)
    assert evaluate_model(model, X, y) == pytest.approx(np.sqrt(np.mean((predict(model, X) - y) ** 2)))


def test_grid_helpers():
    g = log_grid(1e-7, 1, 20)
    assert len(g) == 20 and g[0] == pytest.approx(1e-7) and g[-1] == pytest.approx(1.0)
    assert lin_grid(10, 1000, 20)[0] == 10 and lin_grid(10, 1000, 20)[-1] == 1000
    assert lin_grid(1, 3, 10) == [1, 2, 3]
    assert log_coupling(1) == 0.0
    assert log_coupling(100) == pytest.approx(math.log(100) / 100)


def test_gridspec_validation():
    for bad in (dict(lambdas=[], ms=[1]), dict(lambdas=[1.0], ms=[]), dict(lambdas=[1.0, 0.1], ms=[1]),
                dict(lambdas=[1.0], ms=[2, 2]), dict(lambdas=[0.0], ms=[1]),
                dict(lambdas=[1.0], ms=[1], holdout_fraction=1.0)):
        with pytest.raises(ConfigError):
            GridSpec(**bad)


def test_holdout_split():
    a, b = holdout_split(10, 0.2, make_rng(0))
    assert len(b) == 2 and len(a) == 8
    assert sorted(np.r_[a, b].tolist()) == list(range(10))


def test_one_by_one_grid():
    X, y = synthetic(30, 2, seed=1)
    rep = run_grid(X, y, K1, GridSpec([1e-2], [5]))
    assert len(rep.cells) == 1 and rep.winner == (5, 1e-2)


def test_dominant_lambda_wins():
    # noiseless smooth target: heavy regularization is worse at every m
    rng = np.random.default_rng(2)
    X = rng.uniform(-1, 1, (200, 1))
    y = np.sin(3 * X[:, 0])
    rep = run_grid(X, y, K1, GridSpec([1e-6, 10.0], [5, 10, 20]))
    for m in (5, 10, 20):
        assert rep.mean_errors[(m, 1e-6)] < rep.mean_errors[(m, 10.0)]
    assert rep.winner[1] == 1e-6


def test_winner_minimizes_with_tie_break():
    X, y = synthetic(60, 2, seed=3)
    rep = run_grid(X, y, K1, GridSpec(log_grid(1e-4, 1, 4), [2, 4, 8], trials=2))
    best = min(rep.mean_errors.values())
    ties = sorted(k for k, v in rep.mean_errors.items() if v == best)
    assert rep.winner == ties[0]
    # m larger than the training split: all cells at the same level tie, so the smallest m wins
    Xs, ys = synthetic(10, 2, seed=4)
    rep = run_grid(Xs, ys, K1, GridSpec([0.1], [8]))
    assert rep.winner == (8, 0.1)


def test_grid_too_large():
    X, y = synthetic(20, 2, seed=0)
    with pytest.raises(InputError):
        run_grid(X, y, K1, GridSpec([0.1], [17]))


def test_path_reuse_matches_batch():
    X, y = synthetic(80, 3, seed=5)
    grid = GridSpec([1e-5, 1e-2], [3, 6, 12], base_seed=4)
    rep = run_grid(X, y, K1, grid)
    fit, val = holdout_split(80, 0.2, make_rng(4, 0, STREAM_SPLIT))
    idx, _ = sample_sequence(SamplingPlan("plain", 12, 4, (0, STREAM_LANDMARKS)), len(fit))
    for c in rep.cells:
        model = fit_nystrom_batch(X[fit], y[fit], X[fit][idx[: c.m]], K1, c.lam)
        assert abs(rmse(predict(model, X[val]), y[val]) - c.val_error) <= 1e-6


def test_report_contents_and_test_metric():
    X, y = synthetic(100, 2, seed=6)
    Xt, yt = synthetic(40, 2, seed=7)
    rep = run_grid(X, y, K1, GridSpec(log_grid(1e-4, 1e-1, 3), [5, 10], trials=3), X_test=Xt, y_test=yt)
    assert len(rep.cells) == 3 * 3 * 2
    assert [(c.trial, c.lam, c.m) for c in rep.cells] == sorted((c.trial, c.lam, c.m) for c in rep.cells)
    assert len(rep.test_errors) == 3 and len(rep.models) == 3
    assert all(mo.m == rep.winner[0] for mo in rep.models)
    s = rep.summary()
    assert s["test"]["mean"] == pytest.approx(np.mean(rep.test_errors))
    assert s["winner"]["m"] == rep.winner[0]


def test_parallel_identical():
    X, y = synthetic(120, 2, seed=8)
    grid = GridSpec(log_grid(1e-6, 1, 5), [4, 8, 16], trials=3, base_seed=9)
    a, b = run_grid(X, y, K1, grid, n_jobs=1), run_grid(X, y, K1, grid, n_jobs=6)
    assert [(c.trial, c.m, c.lam, c.level, c.val_error) for c in a.cells] == \
           [(c.trial, c.m, c.lam, c.level, c.val_error) for c in b.cells]
    assert a.winner == b.winner


def test_als_strategy_grid():
    X, y = synthetic(100, 2, seed=10)
    rep = run_grid(X, y, K1, GridSpec([1e-3], [5, 20, 40]), strategy=Strategy("als", t=1e-3))
    levels = [c.level for c in rep.cells]
    assert levels == sorted(levels) and levels[-1] <= 40
    rep2 = run_grid(X, y, K1, GridSpec([1e-3], [5, 20]), strategy=Strategy("als", t=1e-3, sketch_size=30))
    assert len(rep2.cells) == 2
    with pytest.raises(ConfigError):
        Strategy("als")


def test_constant_coupling_reduces_to_grid():
    X, y = synthetic(90, 2, seed=11)
    ms = [2, 5, 9, 14]
    a = run_m_regularized(X, y, K1, ms, coupling=lambda m: 1e-3, trials=2, base_seed=5)
    b = run_grid(X, y, K1, GridSpec([1e-3], ms, trials=2, base_seed=5))
    assert [(c.m, c.val_error) for c in a.cells] == [(c.m, c.val_error) for c in b.cells]
    assert a.winner == b.winner


def test_log_coupling_clamps():
    X, y = synthetic(60, 2, seed=12)
    rep = run_m_regularized(X, y, K1, [1, 4, 16])
    lam_of = {c.m: c.lam for c in rep.cells}
    assert lam_of[1] == 1e-15
    assert lam_of[4] == pytest.approx(math.log(4) / 4) and lam_of[16] == pytest.approx(math.log(16) / 16)
    assert rep.winner[0] in (1, 4, 16)


def test_m_regularization_direction():
    # at tiny fixed lam, validation error is not minimized at the largest m
    rng = np.random.default_rng(13)
    X = rng.uniform(-1, 1, (500, 3))
    y = np.sin(2 * X[:, 0]) + X[:, 1] * X[:, 2] + 0.5 * rng.standard_normal(500)
    ms = lin_grid(5, 250, 15)
    rep = run_m_regularized(X, y, KernelSpec(1.0), ms, coupling=lambda m: 1e-9)
    errs = [rep.mean_errors[(m, 1e-9)] for m in ms]
    assert min(errs) < errs[-1]
