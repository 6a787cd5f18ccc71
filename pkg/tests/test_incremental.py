import gc
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import nystrom_krls.incremental as inc
from conftest import synthetic
from nystrom_krls import (InputError, KernelSpec, fit_nystrom_batch, gram_block, naive_path, path_init, path_step,
                          predict, run_path)
from nystrom_krls.incremental import border_vectors

K1 = KernelSpec(1.0)


def rel_rmse(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def test_init_scalar():
    s = path_init([[0.0]], [1.0], K1, 1.0, [0.0])
    np.testing.assert_array_equal(s.R, [[np.sqrt(2.0)]])
    np.testing.assert_array_equal(s.A, [[1.0]])


def test_init_gamma():
    X, y = synthetic(10, 3, seed=8)
    lam = 0.3
    s = path_init(X, y, K1, lam, X[4])
    a = np.array([np.exp(-np.sum((x - X[4]) ** 2) / 2) for x in X])
    gamma = a @ a + lam * 10
    assert abs(s.R[0, 0] ** 2 - gamma) <= 1e-12 * gamma
    np.testing.assert_allclose(s.R.T @ s.R, s.gram(), rtol=1e-15)


def test_init_rejects_bad_lambda():
    with pytest.raises(InputError):
        path_init([[0.0]], [1.0], K1, 0.0, [0.0])


def test_border_identity():
    rng = np.random.default_rng(0)
    for t in range(1, 30):
        c, gamma = rng.standard_normal(t), float(rng.uniform(0.1, 10))
        u, v = border_vectors(c, gamma)
        block = np.zeros((t + 1, t + 1))
        block[:t, t] = block[t, :t] = c
        block[t, t] = gamma
        np.testing.assert_allclose(np.outer(u, u) - np.outer(v, v), block, atol=1e-10, rtol=0)


def test_duplicate_landmark_step():
    X, y = synthetic(30, 2, seed=1)
    Xt, _ = synthetic(20, 2, seed=2)
    res = run_path(X, y, K1, 1e-3, X[[3, 3]])
    one = fit_nystrom_batch(X, y, X[[3]], K1, 1e-3)
    np.testing.assert_allclose(predict(res.models[1], Xt), predict(one, Xt), atol=1e-6)


def test_single_level_path():
    X, y = synthetic(15, 2, seed=3)
    res = run_path(X, y, K1, 0.1, X[:1])
    assert res.levels == [1]
    np.testing.assert_allclose(res.models[0].alpha, fit_nystrom_batch(X, y, X[:1], K1, 0.1).alpha, rtol=1e-12)


def test_path_seed9_every_level():
    X, y = synthetic(50, 3, seed=9)
    rng = np.random.default_rng(9)
    L = X[rng.choice(50, 10, replace=False)]
    res = run_path(X, y, K1, 1e-3, L, check=True)
    assert res.levels == list(range(1, 11))
    assert res.max_factor_error <= 1e-7
    for t, model in zip(res.levels, res.models):
        batch = fit_nystrom_batch(X, y, L[:t], K1, 1e-3)
        assert rel_rmse(predict(model, X), predict(batch, X)) <= 1e-6


def test_columns_match_kernel():
    X, y = synthetic(20, 2, seed=4)
    s = path_init(X, y, K1, 0.1, X[0], capacity=1)
    for j in range(1, 6):
        path_step(s, X[j])
    np.testing.assert_array_equal(s.A, gram_block(K1, X, X[:6]))
    np.testing.assert_array_equal(s.Ktt, gram_block(K1, X[:6], X[:6]))
    assert s.t == 6 and len(s.landmarks) == 6


def test_level_subset_and_emit():
    X, y = synthetic(40, 2, seed=5)
    seen = []
    res = run_path(X, y, K1, 1e-2, X[:12], levels=[3, 7, 12], emit=lambda t, mo, el: seen.append((t, mo.m)))
    assert res.levels == [3, 7, 12] and seen == [(3, 3), (7, 7), (12, 12)]
    assert all(a <= b for a, b in zip(res.times, res.times[1:]))
    full = run_path(X, y, K1, 1e-2, X[:12])
    np.testing.assert_array_equal(res.models[1].alpha, full.models[6].alpha)
    with pytest.raises(InputError):
        run_path(X, y, K1, 1e-2, X[:5], levels=[6])
    with pytest.raises(InputError):
        run_path(X, y, K1, 1e-2, np.zeros((0, 2)))


def test_downdate_failure_recovers(monkeypatch):
    X, y = synthetic(40, 2, seed=6)
    L = X[:8]
    ref = run_path(X, y, K1, 1e-2, L)
    calls = []

    def failing(R, x):
        calls.append(1)
        return 0

    monkeypatch.setattr(inc, "_downdate", failing)
    res = run_path(X, y, K1, 1e-2, L, check=True)
    assert res.recoveries == 7 == len(calls)
    assert res.max_factor_error <= 1e-7
    for a, b in zip(res.models, ref.models):
        assert rel_rmse(predict(a, X), predict(b, X)) <= 1e-6


def test_recovery_rare_on_benchmark_like_config():
    X, y = synthetic(1000, 8, seed=7)
    rng = np.random.default_rng(7)
    L = X[rng.choice(1000, 200, replace=False)]
    steps = recoveries = 0
    for lam in (1e-7, 1e-4, 1e-1):
        steps += 199
        recoveries += run_path(X, y, KernelSpec(2.0), lam, L, levels=[200]).recoveries
    assert recoveries < 0.01 * steps


def test_naive_path_matches():
    X, y = synthetic(60, 2, seed=8)
    lv = [2, 5, 9]
    naive = naive_path(X, y, K1, 1e-2, X[:9], lv)
    res = run_path(X, y, K1, 1e-2, X[:9], levels=lv)
    for a, b in zip(res.models, naive):
        assert rel_rmse(predict(a, X), predict(b, X)) <= 1e-6


paths = st.tuples(st.integers(10, 120), st.integers(1, 6), st.integers(1, 15), st.floats(-8, 0),
                  st.floats(np.log10(0.02), np.log10(0.5)), st.integers(0, 2**32 - 1))


@settings(max_examples=40, deadline=None)
@given(paths)
def test_path_batch_equivalence(inst):
    n, d, m, loglam, logw, seed = inst
    X, y = synthetic(n, d, seed)
    k = KernelSpec(np.sqrt(d) * 10**logw)
    L = X[np.random.default_rng(seed).choice(n, min(m, n), replace=False)]
    lam = 10**loglam
    res = run_path(X, y, k, lam, L, check=True)
    assert res.max_factor_error <= 1e-7
    Knm, Kmm = gram_block(k, X, L), gram_block(k, L, L)
    for t, model in zip(res.levels, res.models):
        batch = fit_nystrom_batch(X, y, L[:t], k, lam)
        # no solver of G_t does better than eps * cond(G_t)
        G = Knm[:, :t].T @ Knm[:, :t] + lam * n * Kmm[:t, :t]
        tol = max(1e-6, 100 * np.finfo(float).eps * np.linalg.cond(G))
        assert rel_rmse(predict(model, X), predict(batch, X)) <= tol


def _median_time(fn, reps):
    ts = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


@pytest.mark.slow
def test_doubling_m_cost():
    X, y = synthetic(20000, 5, seed=0)
    k = KernelSpec(np.sqrt(5))
    L = X[np.random.default_rng(0).choice(20000, 300, replace=False)]
    run_path(X, y, k, 1e-3, L[:10])  # warm up
    small = _median_time(lambda: run_path(X, y, k, 1e-3, L[:150], levels=[150]), 3)
    big = _median_time(lambda: run_path(X, y, k, 1e-3, L, levels=[300]), 3)
    assert big <= 4.5 * small + 0.05


def _step_times(X, y, k, L, C, KL, m, reps=9):
    out = []
    for _ in range(reps):
        s = path_init(X, y, k, 1e-3, L[0], column=C[:, 0], capacity=m)
        ts = []
        for t in range(2, m + 1):
            t0 = time.perf_counter()
            path_step(s, L[t - 1], column=C[:, t - 1], cross=KL[t - 1, : t - 1])
            ts.append(time.perf_counter() - t0)
        out.append(ts)
    return out


@pytest.mark.slow
def test_per_step_cost_model():
    rng = np.random.default_rng(0)
    n, m, d = 20000, 400, 5
    X, y = rng.standard_normal((n, d)), rng.standard_normal(n)
    k = KernelSpec(np.sqrt(d))
    L = X[rng.choice(n, m, replace=False)]
    C = np.asfortranarray(gram_block(k, X, L))
    KL = gram_block(k, L, L)
    gc.disable()  # collector pauses land on the same steps every repetition
    try:
        reps = _step_times(X, y, k, L, C, KL, m)
    finally:
        gc.enable()
    per_step = np.median(reps, axis=0)
    levels = np.arange(2, m + 1)
    sel = levels >= m // 4
    F = np.c_[n * levels[sel], levels[sel] ** 2]
    coef, *_ = np.linalg.lstsq(F, per_step[sel], rcond=None)
    fit = F @ coef
    assert np.max(np.abs(fit - per_step[sel]) / per_step[sel]) <= 0.3
