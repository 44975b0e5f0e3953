import numpy as np
import pytest

from pcconv.graph import Graph


def random_graph(rng, m, p_edge=0.15, connected=False):
    u, v = np.triu_indices(m, k=1)
    keep = rng.random(len(u)) < p_edge
    edges = np.column_stack([u[keep], v[keep]])
    if connected and m > 1:
        # chain through a random order so every node is reached
        order = rng.permutation(m)
        edges = np.vstack([edges, np.column_stack([order[:-1], order[1:]])])
    return Graph.from_edges(m, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
