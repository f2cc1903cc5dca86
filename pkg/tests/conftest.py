import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from polarred import catalog

settings.register_profile(
    "repo", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def models():
    return {name: catalog.build(name) for name in catalog.CATALOG}


@pytest.fixture(scope="session")
def su2(models):
    return models["su2-conj"]


@pytest.fixture(scope="session")
def su3(models):
    return models["su3-conj"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CRITERIA_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
