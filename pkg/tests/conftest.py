import numpy as np
import pytest

from slaforge.model import build_instance


def random_instance(rng, max_categories=3, max_boroughs=3, allow_zero_rows=False):
    """Random valid problem instance for property loops."""
    K = int(rng.integers(1, max_categories + 1))
    B = int(rng.integers(1, max_boroughs + 1))
    lam = rng.uniform(0.1, 5.0, size=(K, B))
    if allow_zero_rows and K > 1 and rng.random() < 0.3:
        lam[int(rng.integers(0, K)), :] = 0.0
    risk = rng.uniform(0.5, 12.0, size=(K, B))
    slack = float(rng.uniform(0.5, 10.0))
    alpha = float(rng.choice([1.0, -np.log(0.05)]))
    return build_instance(
        [f"cat{i}" for i in range(K)],
        [f"bor{j}" for j in range(B)],
        lam,
        risk,
        total_budget=float(lam.sum()) + slack,
        tail_param=alpha,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
