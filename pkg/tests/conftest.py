import itertools

import numpy as np
import pytest

from mrfsdp import BinaryTerm, MrfInstance, UnaryTerm


def random_instance(rng, max_nodes=5, max_labels=4, min_nodes=1):
    """Random small instance with arbitrary-sign weights."""
    n = int(rng.integers(min_nodes, max_nodes + 1))
    k = int(rng.integers(2, max_labels + 1))
    unary = []
    seen = set()
    for _ in range(int(rng.integers(0, 2 * n + 1))):
        node, lab = int(rng.integers(n)), int(rng.integers(k))
        if (node, lab) in seen:
            continue
        seen.add((node, lab))
        unary.append(UnaryTerm(node, lab, float(rng.normal())))
    pairs = list(itertools.combinations(range(n), 2))
    rng.shuffle(pairs)
    m = int(rng.integers(0, len(pairs) + 1)) if pairs else 0
    binary = [BinaryTerm(i, j, float(rng.normal())) for i, j in pairs[:m]]
    return MrfInstance(n, k, tuple(unary), tuple(binary))


def all_labelings(n, k):
    return (np.array(x) for x in itertools.product(range(k), repeat=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
