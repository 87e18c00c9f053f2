import pytest

from kirchhoff.closed_form import BubbleSpec, KirchhoffParams
from kirchhoff.radial_grid import build_grid, default_grid_spec


@pytest.fixture(scope="session")
def params11():
    return KirchhoffParams(1.0, 1.0)


@pytest.fixture(scope="session")
def spec11(params11):
    return BubbleSpec(params11)


@pytest.fixture(scope="session")
def grid256(spec11):
    return build_grid(default_grid_spec(spec11, 256))


@pytest.fixture(scope="session")
def grid128(spec11):
    return build_grid(default_grid_spec(spec11, 128))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
