from __future__ import annotations

import pytest

from annulus_wrinkles import REFERENCE_CONFIG, default_k_set, measure_grid, minimize_Finfty, solve_free_boundary
from annulus_wrinkles.config import DEFAULT_SCHEDULE
from annulus_wrinkles.recovery import run_gamma_limsup

ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(f"criterion {number}: {lines[number]}")


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    return pytestconfig.stash[ACCEPTANCE_KEY]


@pytest.fixture(scope="session")
def sol():
    return solve_free_boundary(REFERENCE_CONFIG)


@pytest.fixture(scope="session")
def minimizer(sol):
    """Minimizer of F_inf on the 200 x 64 grid."""
    return minimize_Finfty(sol, measure_grid(sol, 200), default_k_set(64))


@pytest.fixture(scope="session")
def gamma_rows(sol, minimizer):
    return run_gamma_limsup(minimizer.mu, sol, DEFAULT_SCHEDULE)
