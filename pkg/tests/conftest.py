import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lockdown_opt import table2_params, table2_state  # noqa: E402
from lockdown_opt.switching import optimal_t0, optimal_t0_alpha_zero  # noqa: E402

import acceptance_log  # noqa: E402


@pytest.fixture(scope="session")
def params():
    return table2_params()


@pytest.fixture(scope="session")
def init():
    return table2_state()


@pytest.fixture(scope="session")
def partial_opt(params, init):
    return optimal_t0(params, init, 0.231, 100.0)


@pytest.fixture(scope="session")
def total_opt(params, init):
    return optimal_t0_alpha_zero(params, init, 100.0)


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
