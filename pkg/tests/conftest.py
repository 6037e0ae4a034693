import numpy as np
import pytest

from partialgl.graphs import Graph, build_laplacian, eigendecompose, generate_er


def ring(n):
    A = np.zeros((n, n))
    i = np.arange(n)
    A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1.0
    return Graph(A)


def path_graph(n):
    A = np.zeros((n, n))
    i = np.arange(n - 1)
    A[i, i + 1] = A[i + 1, i] = 1.0
    return Graph(A)


def complete(n):
    return Graph(np.ones((n, n)) - np.eye(n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="module")
def er50():
    g = generate_er(50, 0.2, np.random.default_rng(7))
    return g, build_laplacian(g), eigendecompose(build_laplacian(g))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
