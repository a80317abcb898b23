import warnings

import numpy as np
import pytest

from fastkm.exceptions import ParameterWarning

ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    status = "PASS" if passed else "FAIL"
    line = f"criterion {number:>2} {status}: {title} ({detail})"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_parameter_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ParameterWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
