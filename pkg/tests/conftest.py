import numpy as np
import pytest

from besovns.littlewood_paley import build_partition
from besovns.rng import make_rng
from besovns.spectral import Field, leray_project, make_grid

ACCEPTANCE_LINES: list[str] = []


def random_field(grid, seed, components=3, solenoidal=False):
    """White-noise field projected onto the retained band."""
    rng = make_rng(seed)
    f = Field.from_physical(grid, rng.standard_normal((components,) + grid.physical_shape))
    if solenoidal:
        c = np.array(f.coeffs)
        c[:, 0, 0, 0] = 0
        f = leray_project(Field(grid, c))
    return f


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16)


@pytest.fixture(scope="session")
def grid32():
    return make_grid(32)


@pytest.fixture(scope="session")
def part16(grid16):
    return build_partition(grid16)


@pytest.fixture(scope="session")
def part32(grid32):
    return build_partition(grid32)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
