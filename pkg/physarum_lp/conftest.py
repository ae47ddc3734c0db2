import numpy as np
import pytest

from physarum_lp.lp_instance import random_instance, simplex_instance
from physarum_lp.models import LpInstance, NetworkSpec


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    """GᵀG + I for a Gaussian G."""
    g = rng.standard_normal((n, n))
    return g.T @ g + np.eye(n)


def random_feasible_instances(seed: int, count: int, max_rows: int = 4, max_cols: int = 8):
    """(instance, interior feasible point) pairs with 1 ≤ |N| ≤ max_rows and |N| < |E| ≤ max_cols."""
    rng = np.random.default_rng(seed)
    pairs = []
    for k in range(count):
        rows = int(rng.integers(1, max_rows + 1))
        cols = int(rng.integers(rows + 1, max_cols + 1))
        pairs.append(random_instance(rng, rows, cols, name=f"random_{seed}_{k}"))
    return pairs


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture
def two_path():
    """Unit simplex with costs (1, 2): opt = 1 at x* = (1, 0)."""
    return simplex_instance([1.0, 2.0], name="two_path")


@pytest.fixture
def uniform_pair():
    return simplex_instance([1.0, 1.0], name="uniform_pair")


@pytest.fixture
def single_edge():
    return LpInstance(constraint_matrix=[[1.0]], rhs=[1.0], costs=[5.0], name="single_edge")


@pytest.fixture
def triangle():
    """0→1, 1→2 and the direct edge 0→2, both routes costing 2."""
    return NetworkSpec(
        node_count=3,
        edges=[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 2.0)],
        supplies=[1.0, 0.0, -1.0],
        name="triangle",
    )
