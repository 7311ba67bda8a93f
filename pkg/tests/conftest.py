import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from greedygossip.topology import Graph, generate_grid, generate_rgg  # noqa: E402


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def pair():
    return Graph.from_edges(2, [(0, 1)], locations=[[0.0, 0.0], [1.0, 0.0]])


@pytest.fixture(scope="session")
def rgg50():
    return generate_rgg(50, 7)


@pytest.fixture(scope="session")
def grid5():
    return generate_grid(5)


def cycle(n):
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
