import math

import pytest

from invwave.grid import Grid
from invwave.model import ModelParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def base_params():
    return ModelParams(0.2, 1.0, l=0.08)


@pytest.fixture(scope="session")
def grid60():
    return Grid(60.0, 2400)


@pytest.fixture(scope="session")
def wave_c2(base_params, grid60):
    from invwave.wave import solve_wave
    return solve_wave(base_params, 2.0, grid60)


@pytest.fixture(scope="session")
def c_star_02():
    return 2.0 * math.sqrt(0.8)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
