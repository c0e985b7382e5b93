import itertools

import numpy as np
import pytest

from tdrl.graph import (
    ErConfig,
    Graph,
    cycle_graph,
    generate_er,
    k_tree,
    make_rng,
    random_tree,
)

# 7-node tree used for the worked elimination example: leaves 1, 2 hang off 3,
# then the chain 3-4-5 and leaves 6, 7 off 5.
TREE7_EDGES = [(1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (5, 7)]
# eliminating 4 first joins 3 and 5, so {3, 4, 5} is a clique of size 3
TREE7_UPPER = [4, 1, 2, 3, 6, 7, 5]
# leaf peeling; 1 and 2 can be swapped without changing the width
TREE7_LOWER = [1, 2, 3, 4, 6, 7, 5]


@pytest.fixture
def tree7():
    return Graph(range(1, 8), TREE7_EDGES)


def mixed_small_graphs(count, seed, max_n=8, min_n=1):
    """ER (p in {0.2, 0.5, 0.8}), trees, cycles and k-trees with ``min_n <= n <= max_n``."""
    rng = make_rng(seed)
    out = []
    for i in range(count):
        kind = i % 6
        n = int(rng.integers(min_n, max_n + 1))
        s = int(rng.integers(2**31))
        if kind < 3:
            g = generate_er(ErConfig(n, (0.2, 0.5, 0.8)[kind], s))
        elif kind == 3:
            g = random_tree(n, s)
        elif kind == 4:
            g = cycle_graph(max(n, 3))
        else:
            k = int(rng.integers(1, 4))
            g = k_tree(max(n, k + 1), k, s)
        out.append(g)
    return out


def naive_min_width(g):
    """Reference: min over every permutation of the max degree at elimination time."""
    from tdrl.elimination import width_of_order

    if g.num_nodes() == 0:
        return 0
    return min(width_of_order(g, p)[0] for p in itertools.permutations(g.nodes))


def numeric_grad(f, x: np.ndarray, h: float = 1e-5, coords=None) -> np.ndarray:
    """Central differences of scalar ``f`` w.r.t. ``x`` (modified in place and restored)."""
    out = np.zeros_like(x)
    it = coords if coords is not None else list(np.ndindex(x.shape))
    for idx in it:
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        out[idx] = (fp - fm) / (2 * h)
    return out


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - b).max() / scale)
