import numpy as np
import pytest

from graph_core import build_shift


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run end-to-end tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def path_adjacency(n: int) -> np.ndarray:
    a = np.zeros((n, n))
    idx = np.arange(n - 1)
    a[idx, idx + 1] = 1.0
    a[idx + 1, idx] = 1.0
    return a


def star_adjacency(n_leaves: int) -> np.ndarray:
    a = np.zeros((n_leaves + 1, n_leaves + 1))
    a[0, 1:] = 1.0
    a[1:, 0] = 1.0
    return a


def random_adjacency(n: int, rng: np.random.Generator, density: float = 0.4) -> np.ndarray:
    """Symmetric weighted graph with at least a spanning path."""
    w = rng.uniform(0.1, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < density)
    w = np.triu(w, 1)
    w = w + w.T
    return np.maximum(w, 0.5 * path_adjacency(n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def path3():
    return build_shift(path_adjacency(3), normalize=False)


@pytest.fixture
def star3():
    return build_shift(star_adjacency(3), normalize=False)


@pytest.fixture
def small_graph(rng):
    return build_shift(random_adjacency(6, rng))
