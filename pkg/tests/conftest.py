"""Shared fixtures: seeded workloads and small graphs."""

import logging

import numpy as np
import pytest

from app.core.datasets import generate_attributes, generate_vectors
from app.core.graph import CompositeGraph
from app.core.logging import ROOT_LOGGER
from app.core.models import DistanceMode, ObjectSet, Query


def make_objects(
    n: int,
    d: int,
    cardinalities: tuple[int, ...] = (),
    seed: int = 0,
    distribution: str = "gaussian",
) -> ObjectSet:
    """Seeded object set with uniform attributes."""
    vectors = generate_vectors(n, d, seed=seed, distribution=distribution)
    if not cardinalities:
        return ObjectSet.from_arrays(vectors)
    attrs = generate_attributes(n, len(cardinalities), cardinalities, seed=seed + 1000)
    return ObjectSet.from_arrays(vectors, attrs, cardinalities)


def make_queries(
    count: int,
    d: int,
    cardinalities: tuple[int, ...] = (),
    seed: int = 1,
    k_results: int = 10,
) -> list[Query]:
    """Seeded queries drawn from the same distributions as ``make_objects``."""
    qset = make_objects(count, d, cardinalities, seed=seed)
    return [qset.query(i, k_results) for i in range(qset.n)]


def complete_graph(n: int, mode: DistanceMode | None = None) -> CompositeGraph:
    """Every vertex linked to every other vertex."""
    return CompositeGraph(
        n=n,
        adjacency=[[j for j in range(n) if j != i] for i in range(n)],
        degree_bound=max(n - 1, 1),
        distance_mode=mode or DistanceMode.euclidean(),
    )


@pytest.fixture(autouse=True)
def reset_logging():
    """Drop handlers installed by CLI runs so later tests log normally."""
    yield
    logger = logging.getLogger(ROOT_LOGGER)
    logger.handlers.clear()
    logger.propagate = True


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def small_objects() -> ObjectSet:
    """300 gaussian 8-d objects with two attributes of cardinality 3."""
    return make_objects(300, 8, (3, 3), seed=7)


@pytest.fixture
def small_queries() -> list[Query]:
    return make_queries(30, 8, (3, 3), seed=8)
