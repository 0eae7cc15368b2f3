import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pubgood.distributions import exponential, uniform
from pubgood.graphs import from_edges

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

UNIT = uniform(0.0, 1.0)
EXP1 = exponential(1.0)


@pytest.fixture
def unit():
    return UNIT


@pytest.fixture
def exp1():
    return EXP1


def graph_from_bits(n, bits):
    """Graph on ``n`` nodes whose edges are selected by a flat bit list."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return from_edges(n, [e for e, b in zip(pairs, bits) if b])
