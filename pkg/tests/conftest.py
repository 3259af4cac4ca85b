import numpy as np
import pytest
from hypothesis import settings

from dynmln.netdata import DynMultiNet, MISSING

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_net(V=5, K=2, n=4, p=0.3, p_missing=0.0, seed=0):
    g = np.random.default_rng(seed)
    C = V * (V - 1) // 2
    obs = (g.random((K, n, C)) < p).astype(np.int8)
    obs[g.random((K, n, C)) < p_missing] = MISSING
    return DynMultiNet(V, np.arange(1.0, n + 1), obs)


@pytest.fixture
def small_net():
    return random_net()


_ACCEPTANCE = []


@pytest.fixture
def acceptance_report():
    """Record one summary line; all lines are repeated at the end of the run."""

    def emit(line):
        print(line)
        _ACCEPTANCE.append(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
