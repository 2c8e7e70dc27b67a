import numpy as np
import pytest

from armaxdesign.harness.config import reference_controller, reference_system


@pytest.fixture
def model():
    return reference_system()


@pytest.fixture
def ctrl():
    return reference_controller()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s[7:10]):
            terminalreporter.write_line(line)
