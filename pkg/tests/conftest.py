import numpy as np
import pytest

from aecal.config import ExperimentConfig
from aecal.physics import STEEL, TITANIUM, cylinder_layout

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def geom():
    return cylinder_layout()


@pytest.fixture(scope="session")
def cfg():
    return ExperimentConfig.from_dict(profile="fast")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def materials():
    return STEEL, TITANIUM


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
