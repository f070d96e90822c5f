import numpy as np
import pytest

from canonsys import models


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def random_instances():
    rng = np.random.default_rng(7)
    return [models.random_fc_det1(rng) for _ in range(6)]


@pytest.fixture(scope="session")
def ex3():
    return models.example3([0.5, 0.75, 0.5], [0.4, -0.3, 0.6])


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.line(tag))
