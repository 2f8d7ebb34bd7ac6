import json
import os

import numpy as np
import pytest

HERE = os.path.dirname(os.path.abspath(__file__))


@pytest.fixture(scope="session")
def frozen():
    with open(os.path.join(HERE, "oracles", "frozen.json")) as fh:
        return json.load(fh)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance results, one line per criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
