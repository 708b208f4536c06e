import numpy as np
import pytest

from stirap_bell import SystemParams, run_single_transfer


@pytest.fixture(scope="session")
def transfer_params():
    return SystemParams(g=1.0, delta=50.0, ramp=0.01, gamma=0.1)


@pytest.fixture(scope="session")
def transfer_trajectory(transfer_params):
    return run_single_transfer(transfer_params)


@pytest.fixture
def rng():
    return np.random.default_rng(20101)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(number, name, ok, detail):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {number} {status}: {name} ({detail})"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
