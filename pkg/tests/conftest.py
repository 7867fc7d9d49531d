## @file conftest.py
## @brief Shared fixtures: the bundled scenarios, their syntheses and random
##        plant and graph factories.

from __future__ import annotations

import numpy as np
import pytest

from DIO_Observer.graph import from_edge_list
from DIO_Observer.interval_core import IntervalVector
from DIO_Observer.model import NoiseBounds, PlantModel
from DIO_Observer.pipeline import synthesize
from DIO_Observer.scenario import load_bundled


@pytest.fixture(scope="session")
def example1():
    return load_bundled("example1")


@pytest.fixture(scope="session")
def example2():
    return load_bundled("example2")


@pytest.fixture(scope="session")
def example1_synthesis(example1):
    return synthesize(example1)


@pytest.fixture(scope="session")
def example2_synthesis(example2):
    return synthesize(example2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def strong_digraph():
    """Factory: random strongly connected digraph, a shuffled ring plus random chords."""
    def build(rng, N, density=0.15):
        order = rng.permutation(N)
        edges = {(int(order[k]), int(order[(k + 1) % N])) for k in range(N)}
        for i in range(N):
            for j in range(N):
                if i != j and rng.random() < density:
                    edges.add((i, j))
        return from_edge_list(N, edges)
    return build


@pytest.fixture(scope="session")
def random_plant():
    """Factory: random plant with one scalar output per agent."""
    def build(rng, N, n, noiseless=False):
        A = rng.normal(scale=1.2 / np.sqrt(n), size=(n, n))
        B = rng.normal(size=(n, n))
        C = tuple(rng.normal(size=(1, n)) for _ in range(N))
        D = tuple(rng.uniform(0.5, 1.5, size=(1, 1)) for _ in range(N))
        if noiseless:
            w_b = IntervalVector(np.zeros(n), np.zeros(n))
            v_b = tuple(IntervalVector([0.0], [0.0]) for _ in range(N))
        else:
            w_half = rng.uniform(0.01, 0.2, size=n)
            w_b = IntervalVector(-w_half, w_half)
            v_b = tuple(IntervalVector([-h], [h]) for h in rng.uniform(0.05, 0.5, size=N))
        return PlantModel(A=A, B=B, C=C, D=D, noise=NoiseBounds(w_b, v_b),
                          x0_bounds=IntervalVector(np.full(n, -2.0), np.full(n, 2.0)))
    return build
