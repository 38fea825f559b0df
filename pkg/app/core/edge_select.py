"""Landing-zone edge selection.

A candidate ``p`` may join the neighbor list of ``i`` only if, for every
neighbor ``j`` already chosen, ``p`` is strictly closer to ``i`` than to ``j``
and no closer to ``i`` than ``j`` is. Neighbors end up both close and spread
out in direction.
"""

from collections.abc import Callable
from typing import Any, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.core.distance import DistanceSpace
from app.core.logging import get_logger

logger = get_logger(__name__)

PairDistance = Callable[[int, int], float]
Metric = Union[DistanceSpace, PairDistance]


class CandidatePool(BaseModel):
    """Candidate neighbors of ``owner``, ascending by (distance, index)."""

    owner: int
    ids: np.ndarray
    dists: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("ids", mode="before")
    @classmethod
    def coerce_ids(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.int64).reshape(-1)

    @field_validator("dists", mode="before")
    @classmethod
    def coerce_dists(cls, v: Any) -> np.ndarray:
        return np.asarray(v, dtype=np.float64).reshape(-1)

    @classmethod
    def from_candidates(cls, owner: int, ids: Any, dists: Any) -> "CandidatePool":
        """Sort, deduplicate and drop ``owner`` from raw candidates."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        dists = np.asarray(dists, dtype=np.float64).reshape(-1)
        keep = ids != owner
        ids, dists = ids[keep], dists[keep]
        order = np.lexsort((ids, dists))
        ids, dists = ids[order], dists[order]
        if len(ids) > 1:
            # first occurrence of each id in sorted order is its smallest distance
            _, first = np.unique(ids, return_index=True)
            first.sort()
            ids, dists = ids[first], dists[first]
        return cls(owner=owner, ids=ids, dists=dists)

    @classmethod
    def from_space(cls, owner: int, ids: Any, space: DistanceSpace) -> "CandidatePool":
        """Pool of ``ids`` with distances to ``owner`` evaluated in ``space``."""
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        ids = np.unique(ids[ids != owner])
        return cls.from_candidates(owner, ids, space.one_to_many(owner, ids))

    def __len__(self) -> int:
        return int(self.ids.shape[0])


def _distances_from(dist: Metric, p: int, others: list[int]) -> np.ndarray:
    if isinstance(dist, DistanceSpace):
        return dist.one_to_many(p, others)
    return np.fromiter((dist(p, j) for j in others), dtype=np.float64, count=len(others))


def in_landing_zone(i: int, j: int, p: int, dist: Metric) -> bool:
    """True iff ``p`` lies in the landing zone of ``i`` with respect to ``j``.

    Equidistant points on the bisector are rejected.
    """
    return dist(p, i) < dist(p, j) and dist(i, p) >= dist(i, j)


def select_neighbors(pool: CandidatePool, k: int, dist: Metric) -> list[int]:
    """Choose up to ``k`` neighbors of ``pool.owner`` from its candidate pool.

    The nearest candidate is always taken. Remaining candidates are scanned
    in ascending order and accepted when they lie in the landing zone of
    every neighbor accepted so far.

    Args:
        pool: Candidates sorted ascending by distance to the owner
        k: Degree bound
        dist: DistanceSpace or any pairwise distance callable

    Returns:
        Selected neighbor indices in insertion (ascending-distance) order
    """
    if len(pool) == 0 or k < 1:
        return []

    selected = [int(pool.ids[0])]
    selected_d = [float(pool.dists[0])]
    for p, d_ip in zip(pool.ids[1:], pool.dists[1:]):
        if len(selected) >= k:
            break
        p = int(p)
        d_ip = float(d_ip)
        # ball test against the owner, then half-space test against each neighbor
        if d_ip < max(selected_d):
            continue
        d_pj = _distances_from(dist, p, selected)
        if np.all(d_ip < d_pj):
            selected.append(p)
            selected_d.append(d_ip)
    return selected


def verify_landing_zone(
    adjacency: list[list[int]], space: DistanceSpace
) -> list[tuple[int, int, int]]:
    """Re-check the pairwise landing-zone property on every neighbor list.

    For each vertex ``i`` and each neighbor ``p`` that follows neighbor ``j``
    in the list, ``dist(p, i) < dist(p, j)`` and ``dist(i, p) >= dist(i, j)``
    must hold.

    Returns:
        ``(i, j, p)`` triples that violate it (empty when the graph is clean)
    """
    violations: list[tuple[int, int, int]] = []
    for i, nbrs in enumerate(adjacency):
        if len(nbrs) < 2:
            continue
        d_i = space.one_to_many(i, nbrs)
        for idx in range(1, len(nbrs)):
            p = nbrs[idx]
            earlier = nbrs[:idx]
            d_pj = space.one_to_many(p, earlier)
            bad = ~((d_i[idx] < d_pj) & (d_i[idx] >= d_i[:idx]))
            violations.extend((i, earlier[t], p) for t in np.flatnonzero(bad))
    if violations:
        logger.warning(f"{len(violations)} landing-zone violations found")
    return violations
