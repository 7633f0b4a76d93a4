import numpy as np
import pytest

from maxenergy import geometry, kernels

# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def interval2000():
    return geometry.build_interval(-1.0, 1.0, 2000)


@pytest.fixture(scope="session")
def exp1():
    return kernels.exponential(1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
