import numpy as np
import pytest

from pirdns.randomness import SecureRandom


@pytest.fixture
def srng():
    return SecureRandom(seed=1234)


@pytest.fixture
def nprng():
    return np.random.default_rng(20240601)


ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
