"""Proximity graph container and graph-quality measurement."""

from collections import deque
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.core.distance import DistanceSpace
from app.core.errors import InvariantViolation, UsageError
from app.core.logging import get_logger
from app.core.models import (
    BuildMeta,
    DegreeStats,
    DistanceMode,
    GraphQualityReport,
    ObjectSet,
)
from app.core.parallel import ordered_map

logger = get_logger(__name__)


class CompositeGraph(BaseModel):
    """Adjacency-list proximity graph over an ObjectSet.

    Neighbor lists keep the ascending-distance order produced by edge
    selection. ``degree_bound`` is ``None`` for threshold graphs, which have
    no bound.
    """

    n: int = Field(..., ge=0)
    adjacency: list[list[int]] = Field(default_factory=list)
    degree_bound: int | None = Field(default=None, ge=1)
    distance_mode: DistanceMode = Field(default_factory=DistanceMode.euclidean)
    build_meta: BuildMeta = Field(default_factory=lambda: BuildMeta(builder="manual"))

    @model_validator(mode="after")
    def check_size(self) -> "CompositeGraph":
        if len(self.adjacency) != self.n:
            raise ValueError(
                f"adjacency has {len(self.adjacency)} lists for {self.n} vertices"
            )
        return self

    @classmethod
    def empty(
        cls, n: int, degree_bound: int | None = None, **kwargs: Any
    ) -> "CompositeGraph":
        """Graph with ``n`` isolated vertices."""
        return cls(n=n, adjacency=[[] for _ in range(n)], degree_bound=degree_bound, **kwargs)

    def neighbors(self, u: int) -> list[int]:
        return self.adjacency[u]

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(a) for a in self.adjacency), dtype=np.int64, count=self.n)

    @property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    @property
    def routing_degree(self) -> int:
        """Degree used by stage-1 sampling: the bound, or the max degree if unbounded."""
        if self.degree_bound is not None:
            return self.degree_bound
        return max(self.max_degree, 1)

    def check_invariants(self) -> None:
        """Raise InvariantViolation on self-loops, duplicates, bad indices or degree overflow."""
        for u, nbrs in enumerate(self.adjacency):
            if len(set(nbrs)) != len(nbrs):
                raise InvariantViolation(f"vertex {u} has duplicate neighbors")
            for v in nbrs:
                if v == u:
                    raise InvariantViolation(f"vertex {u} has a self-loop")
                if not 0 <= v < self.n:
                    raise InvariantViolation(f"vertex {u} links to invalid index {v}")
            if self.degree_bound is not None and len(nbrs) > self.degree_bound:
                raise InvariantViolation(
                    f"vertex {u} has degree {len(nbrs)} > bound {self.degree_bound}"
                )

    def check_aligned(self, objects: ObjectSet) -> None:
        if self.n != objects.n:
            raise UsageError(f"graph has {self.n} vertices, object set has {objects.n}")


def exact_knn(space: DistanceSpace, u: int, k: int) -> np.ndarray:
    """Exact ``k`` nearest objects to object ``u`` (excluding ``u``), ties by index."""
    ids = np.delete(np.arange(space.n, dtype=np.int64), u)
    dists = space.one_to_many(u, ids)
    order = np.lexsort((ids, dists))[:k]
    return ids[order]


def graph_quality(
    g: CompositeGraph,
    objects: ObjectSet,
    sample: int | None = None,
    seed: int = 42,
    k: int | None = None,
    threads: int = 1,
) -> GraphQualityReport:
    """Mean fraction of each vertex's exact k nearest neighbors found in its adjacency.

    Nearest neighbors are computed under the graph's own distance mode. The
    per-vertex ratio divides by ``min(k, n - 1)``; a single-vertex graph has
    nothing to miss and scores 1.0.

    Args:
        g: Graph to measure
        objects: Object set the graph was built over
        sample: Number of vertices to sample; ``None`` (or >= n) uses ALL
        seed: Sampling seed (ignored when all vertices are used)
        k: Neighbors per vertex; defaults to the degree bound, or the max
            degree for unbounded graphs
        threads: Worker count (result independent of it)

    Returns:
        GraphQualityReport with the mean, its standard error and sample size
    """
    if g.n == 0:
        raise UsageError("graph quality of an empty graph is undefined")
    g.check_aligned(objects)
    if sample is not None and sample < 1:
        raise UsageError(f"sample must be positive, got {sample}")

    k_used = k if k is not None else g.routing_degree
    k_eff = min(k_used, g.n - 1)

    exact = sample is None or sample >= g.n
    if exact:
        vertices = np.arange(g.n, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        vertices = np.sort(rng.choice(g.n, size=sample, replace=False))

    if k_eff == 0:
        return GraphQualityReport(
            quality=1.0, sampled_vertices=len(vertices), k_used=k_used, exact=exact
        )

    space = DistanceSpace(objects, g.distance_mode)

    def ratio(u: np.int64) -> float:
        truth = exact_knn(space, int(u), k_eff)
        hits = np.intersect1d(truth, np.asarray(g.adjacency[int(u)], dtype=np.int64))
        return len(hits) / k_eff

    ratios = np.asarray(ordered_map(ratio, vertices, threads), dtype=np.float64)
    quality = float(ratios.mean())
    std_error = 0.0
    if not exact and len(ratios) > 1:
        std_error = float(ratios.std(ddof=1) / np.sqrt(len(ratios)))

    logger.debug(
        f"graph quality {quality:.4f} over {len(vertices)} vertices (k={k_eff})"
    )
    return GraphQualityReport(
        quality=min(max(quality, 0.0), 1.0),
        sampled_vertices=len(vertices),
        k_used=k_used,
        std_error=std_error,
        exact=exact,
    )


def degree_stats(g: CompositeGraph) -> DegreeStats:
    """Min, mean and max out-degree of ``g``.

    Raises:
        InvariantViolation: if the max degree exceeds the graph's bound
    """
    if g.n == 0:
        return DegreeStats(min=0, mean=0.0, max=0)
    degrees = g.degrees()
    stats = DegreeStats(
        min=int(degrees.min()), mean=float(degrees.mean()), max=int(degrees.max())
    )
    if g.degree_bound is not None and stats.max > g.degree_bound:
        raise InvariantViolation(
            f"max degree {stats.max} exceeds bound {g.degree_bound}"
        )
    return stats


def reachable_from(g: CompositeGraph, start: int = 0) -> set[int]:
    """Vertices reachable from ``start`` along out-edges (breadth-first)."""
    if not 0 <= start < g.n:
        raise UsageError(f"start vertex {start} outside 0..{g.n - 1}")
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen
