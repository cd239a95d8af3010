import numpy as np
import pytest

from garchboot.core import GarchSpec, InnovationDistribution, simulate

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def arch1():
    return GarchSpec(1.0, (0.5,))


@pytest.fixture(scope="session")
def gaussian():
    return InnovationDistribution.gaussian()


@pytest.fixture(scope="session")
def arch1_path(arch1, gaussian):
    return simulate(arch1, gaussian, 2000, seed=20240601)


@pytest.fixture(scope="session")
def e_log_eta2():
    """Monte-Carlo oracle for E log(eta^2), eta standard Gaussian, over 10^7 draws."""
    rng = np.random.default_rng(987654321)
    total = 0.0
    for _ in range(10):
        z = rng.standard_normal(1_000_000)
        total += np.log(z * z).sum()
    return total / 1e7


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
