import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = []


@pytest.fixture
def criterion():
    """``report(number, passed, detail)``: one summary line per acceptance criterion."""

    def report(number, passed, detail, seconds=None):
        tail = f" [{seconds:.1f} s]" if seconds is not None else ""
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}{tail}"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA, key=lambda item: item[0]):
            terminalreporter.write_line(line)
