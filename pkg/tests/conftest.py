import numpy as np
import pytest

from zgsopt import scenarios
from zgsopt.sim import simulate, summarize


@pytest.fixture(scope="session")
def baseline_run():
    """The six-agent benchmark at default settings, simulated once per session."""
    sc = scenarios.scenario_numerical_A()
    traj = simulate(sc)
    return sc, traj, summarize(sc, traj)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
