import numpy as np
import pytest

from gridplc import ieee300_paths
from gridplc.grid import Branch, Bus, GridGraph, load_grid


def graph_from_edges(edges, n=None, length=100.0, r=0.3, x=0.4):
    """GridGraph with buses '1'..'n' from 0-based index pairs."""
    if n is None:
        n = 1 + max(max(e) for e in edges)
    buses = {str(i + 1): Bus(str(i + 1), 12.47) for i in range(n)}
    branches = tuple(Branch(str(a + 1), str(b + 1), length, r, x) for a, b in edges)
    return GridGraph(buses, branches)


def path_graph(n):
    return graph_from_edges([(i, i + 1) for i in range(n - 1)], n)


def cycle_graph(n):
    return graph_from_edges([(i, (i + 1) % n) for i in range(n)], n)


def star_graph(leaves):
    return graph_from_edges([(0, i) for i in range(1, leaves + 1)], leaves + 1)


def complete_graph(n):
    return graph_from_edges([(i, j) for i in range(n) for j in range(i + 1, n)], n)


def random_tree_edges(n, rng):
    return [(int(rng.integers(0, i)), i) for i in range(1, n)]


@pytest.fixture(scope="session")
def ieee300():
    edges, buses = ieee300_paths()
    return load_grid(edges, buses=buses, strict_buses=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20101004)


# acceptance criteria report: one line per criterion, printed after the run
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
