import numpy as np
import pytest

from nystrom_krls import KernelSpec

ACCEPTANCE = []


def synthetic(n, d, seed, noise=0.1):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = np.sin(X.sum(axis=1)) + noise * rng.standard_normal(n)
    return X, y


def random_spd(p, seed, cond=None):
    rng = np.random.default_rng(seed)
    if cond is None:
        A = rng.standard_normal((p, p))
        return A @ A.T + p * np.eye(p)
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    G = (Q * np.logspace(0, -np.log10(cond), p)) @ Q.T
    return 0.5 * (G + G.T)


@pytest.fixture
def kernel():
    return KernelSpec(1.0)


@pytest.fixture
def acceptance_report():
    def record(number, name, passed, detail=""):
        ACCEPTANCE.append((number, name, passed, detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {name}: {detail}")
