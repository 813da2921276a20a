"""Shared pytest fixtures."""

import numpy as np
import pytest

from group_ops import GroupElement, random_elements


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def random_element(rng) -> GroupElement:
    """A batch of 1000 standard-normal points of H^1 x R^3."""
    return random_elements(rng, 1, 1000)


@pytest.fixture
def random_pair(rng):
    return random_elements(rng, 1, 1000), random_elements(rng, 1, 1000)


def point(u, t) -> GroupElement:
    """Single point from a list of quaternions (each a 4-list) and a 3-vector."""
    return GroupElement(np.asarray(u, dtype=float).reshape(-1, 4), np.asarray(t, dtype=float))
