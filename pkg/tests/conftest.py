import numpy as np
import pytest

from ldsources.core import LinearEq, LinearFamily, NType

VALUES = (1, 2, 3, 4)
T0 = NType((1, 1, 1, 7))
Q_HAT_PUBLISHED = np.array([0.705, 0.073, 0.039, 0.183])
TABLE1 = {50: 0.868, 100: 0.948, 200: 0.994, 300: 0.999}


@pytest.fixture
def mean_set():
    return LinearEq(VALUES, "17/10")


@pytest.fixture
def mean_family():
    return LinearFamily.mean(VALUES, "17/10")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
