import numpy as np
import pytest

from accelopt import make_log_sum_exp, make_quadratic, make_rosenbrock
from accelopt.config import DEFAULT_LSE_ROWS


@pytest.fixture
def quad():
    return make_quadratic(np.diag([1.0, 10.0]))


@pytest.fixture
def lse():
    return make_log_sum_exp(np.array(DEFAULT_LSE_ROWS), 1.0)


@pytest.fixture
def rosen():
    return make_rosenbrock()


@pytest.fixture
def half_square():
    """E(x) = x^2 / 2 in one dimension."""
    return make_quadratic([[1.0]])


def builtin_objectives():
    return [
        make_quadratic(np.diag([1.0, 10.0])),
        make_log_sum_exp(np.array(DEFAULT_LSE_ROWS), 1.0),
        make_rosenbrock(),
    ]


_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
