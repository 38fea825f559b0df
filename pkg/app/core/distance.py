"""Euclidean, attribute and fusion distances.

All distances go through ``_vector_distances`` / ``_attribute_distances`` so a
pair evaluated one at a time and the same pair evaluated inside a batch give
bit-identical float64 values. Edge selection relies on that when it compares
distances computed at different times.
"""

from typing import Any, Protocol

import numpy as np

from app.core.errors import UsageError
from app.core.models import (
    DistanceMode,
    FusionWeights,
    ObjectSet,
    Query,
    WeightScheme,
)


class HybridPoint(Protocol):
    """Anything carrying a feature vector and attribute codes."""

    @property
    def vector(self) -> np.ndarray: ...

    @property
    def attributes(self) -> np.ndarray: ...


def _vector_distances(rows: np.ndarray, vector: np.ndarray) -> np.ndarray:
    diff = rows - vector
    return np.sqrt(np.sum(diff * diff, axis=1))


def _attribute_distances(rows: np.ndarray, attributes: np.ndarray) -> np.ndarray:
    return np.count_nonzero(rows != attributes, axis=1)


def fuse(
    delta: np.ndarray, chi: np.ndarray, m: int, weights: FusionWeights
) -> np.ndarray:
    """Combine vector distances and attribute distances elementwise.

    Args:
        delta: Euclidean distances
        chi: attribute (Hamming) distances, same shape as ``delta``
        m: number of attributes
        weights: fusion weights

    Returns:
        Fused distances as float64
    """
    delta = np.asarray(delta, dtype=np.float64)
    chi = np.asarray(chi, dtype=np.float64)

    if weights.scheme is WeightScheme.FIXED:
        return weights.omega_v * delta + weights.omega_l * chi

    if weights.scheme is WeightScheme.RECOMMENDED:
        if m == 0:
            return delta.copy()
        return delta * (1.0 + chi / m)

    if weights.scheme is WeightScheme.NORMALIZED:
        assert weights.delta_max is not None
        fused = delta / weights.delta_max
        chi_max = weights.chi_max if weights.chi_max is not None else float(m)
        if chi_max > 0:
            fused = fused + chi / chi_max
        return fused

    # Harmonic mean of delta and the (optionally adjusted) attribute distance
    if weights.harmonic_c is not None:
        chi = np.where(chi == 0, 1.0, chi * weights.harmonic_c)
    denom = delta + chi
    out = np.zeros_like(delta)
    np.divide(2.0 * delta * chi, denom, out=out, where=denom > 0)
    return out


def euclidean(a: Any, b: Any) -> float:
    """Euclidean distance between two feature vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(_vector_distances(a.reshape(1, -1), b)[0])


def attribute_distance(a: Any, b: Any) -> int:
    """Number of attribute positions where the two code vectors differ."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.ndim != 1 or a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return int(_attribute_distances(a.reshape(1, -1), b)[0])


def fusion_distance(a: HybridPoint, b: HybridPoint, weights: FusionWeights) -> float:
    """Fused distance between an object (or query) and an object."""
    delta = euclidean(a.vector, b.vector)
    chi = attribute_distance(a.attributes, b.attributes)
    m = int(np.asarray(a.attributes).shape[0])
    return float(fuse(np.array([delta]), np.array([chi]), m, weights)[0])


class DistanceSpace:
    """An object set seen through one distance mode.

    Stateless apart from references to read-only arrays, so one instance can
    serve concurrent builders and searches.
    """

    def __init__(self, objects: ObjectSet, mode: DistanceMode) -> None:
        self.objects = objects
        self.mode = mode
        self._vectors = objects.vectors
        self._attributes = objects.attributes
        self._m = objects.dim_a
        self._weights = mode.weights

    @property
    def n(self) -> int:
        return self.objects.n

    def distances(
        self, vector: np.ndarray, attributes: np.ndarray, ids: Any
    ) -> np.ndarray:
        """Distances from an arbitrary point to the objects ``ids``."""
        ids = np.asarray(ids, dtype=np.int64)
        delta = _vector_distances(self._vectors[ids], vector)
        if self._weights is None:
            return delta
        chi = _attribute_distances(self._attributes[ids], attributes)
        return fuse(delta, chi, self._m, self._weights)

    def one_to_many(self, i: int, ids: Any) -> np.ndarray:
        """Distances from object ``i`` to the objects ``ids``."""
        return self.distances(self._vectors[i], self._attributes[i], ids)

    def __call__(self, i: int, j: int) -> float:
        return float(self.one_to_many(i, [j])[0])

    def query_distances(self, query: Query, ids: Any) -> np.ndarray:
        """Distances from a query to the objects ``ids``."""
        return self.distances(query.vector, query.attributes, ids)

    def vector_distances(self, vector: np.ndarray, ids: Any) -> np.ndarray:
        """Plain Euclidean distances, whatever the mode."""
        ids = np.asarray(ids, dtype=np.int64)
        return _vector_distances(self._vectors[ids], vector)

    def counter(self, query: Query) -> "QueryDistance":
        """Counting distance function bound to ``query``."""
        return QueryDistance(self, query)


class QueryDistance:
    """Distance-to-query callable that counts every evaluation."""

    def __init__(self, space: DistanceSpace, query: Query) -> None:
        self.space = space
        self.query = query
        self.count = 0

    def __call__(self, ids: Any) -> np.ndarray:
        dists = self.space.query_distances(self.query, ids)
        self.count += int(dists.shape[0])
        return dists


def attribute_matches(objects: ObjectSet, attributes: Any) -> np.ndarray:
    """Boolean mask of objects whose attributes equal ``attributes`` exactly."""
    attributes = np.asarray(attributes, dtype=np.int64)
    if attributes.shape != (objects.dim_a,):
        raise UsageError(
            f"expected {objects.dim_a} attribute codes, got shape {attributes.shape}"
        )
    return _attribute_distances(objects.attributes, attributes) == 0
