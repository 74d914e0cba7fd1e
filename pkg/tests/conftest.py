import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("hglab", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("hglab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary so the
# verdicts are visible even when stdout is captured
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
