import numpy as np
import pytest

from clustermax.marks import MarkModel, Pareto


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)


@pytest.fixture
def pareto2():
    return MarkModel(Pareto(2.0))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
