"""Shared fixtures: standard chains and random reversible chains."""

import numpy as np
import pytest

from curvkit import build_chain, complete, cycle, hypercube, path


@pytest.fixture
def two_state():
    return build_chain([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def cycle5():
    return cycle(5)


@pytest.fixture
def cycle6():
    return cycle(6)


@pytest.fixture
def hyp2():
    return hypercube(2)


@pytest.fixture
def hyp3():
    return hypercube(3)


def random_reversible_chain(n: int, seed: int, edge_prob: float = 0.5):
    """Weighted walk on a random connected graph: Q = w/rowsum, pi ~ rowsum."""
    rng = np.random.default_rng(seed)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                w[i, j] = w[j, i] = 0.2 + rng.random()
    order = rng.permutation(n)
    for a, b in zip(order, order[1:]):           # random spanning path
        w[a, b] = w[b, a] = max(w[a, b], 0.2 + rng.random())
    deg = w.sum(axis=1)
    q = w / deg[:, None]
    pi = deg / deg.sum()
    return build_chain(q, pi=pi)


def positive_density(chain, seed: int, spread: float = 1.0):
    """A strictly positive density with <rho, 1>_pi = 1."""
    rng = np.random.default_rng(seed)
    rho = np.exp(spread * rng.standard_normal(chain.n_states))
    return rho / float(rho @ chain.pi)


def small_chain_pool():
    """Mixed families used by the randomized cross-checks."""
    pool = [
        build_chain([[0.0, 1.0], [1.0, 0.0]]),
        build_chain([[0.5, 0.5], [0.5, 0.5]]),
        cycle(3), cycle(5), cycle(6),
        hypercube(1), hypercube(2), hypercube(3),
        complete(3), complete(4), complete(5),
        path(2), path(4), path(6),
    ]
    pool += [random_reversible_chain(n, seed) for n, seed in
             [(4, 11), (5, 12), (6, 13), (7, 14), (8, 15)]]
    return pool
