import numpy as np
import pytest

from markov_hoeffding import spectral


def make_kernel(rng, n, f=None, laziness=None):
    rows = rng.dirichlet(np.ones(n), size=n)
    a = rng.uniform(0, 0.7) if laziness is None else laziness
    P = a * np.eye(n) + (1 - a) * rows
    P /= P.sum(axis=1, keepdims=True)
    return spectral.FiniteKernel(P, rng.uniform(size=n) if f is None else f)


def make_reversible(rng, n):
    """Random reversible kernel from a symmetric weight matrix."""
    W = rng.uniform(size=(n, n))
    W = W + W.T
    P = W / W.sum(axis=1, keepdims=True)
    return spectral.FiniteKernel(P, rng.uniform(size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
