"""Threshold composite graph: connect every pair within a fused-distance threshold."""

import numpy as np

from app.core.builders.base import GraphBuilder
from app.core.config import settings
from app.core.errors import UsageError
from app.core.graph import CompositeGraph
from app.core.logging import get_logger
from app.core.models import BuildParams, DistanceMode, ObjectSet
from app.core.parallel import ordered_map

logger = get_logger(__name__)


class ThresholdGraphBuilder(GraphBuilder):
    """Quadratic builder meant for oracle-scale object sets.

    Edges are undirected (stored in both directions) and unbounded in degree.
    Each neighbor list is ordered by ascending distance.
    """

    name = "threshold"

    def __init__(
        self,
        params: BuildParams | None = None,
        mode: DistanceMode | None = None,
        max_objects: int | None = None,
    ) -> None:
        super().__init__(params, mode)
        self.max_objects = max_objects or settings.threshold_max_objects

    def build(self, objects: ObjectSet) -> CompositeGraph:
        theta = self.params.theta_prime
        if theta is None:
            raise UsageError("threshold graph needs theta_prime")
        n = objects.n
        if n < 1:
            raise UsageError("cannot build a graph over an empty object set")
        if n > self.max_objects:
            raise UsageError(
                f"threshold graph is quadratic; n={n} exceeds the cap of "
                f"{self.max_objects}. Use --graph npg-kgraph or npg-nsw instead."
            )

        logger.info(f"threshold: n={n}, theta'={theta}")
        space = self.space(objects)
        all_ids = np.arange(n, dtype=np.int64)

        def row(i: int) -> list[int]:
            dists = space.one_to_many(i, all_ids)
            mask = dists <= theta
            mask[i] = False
            ids = all_ids[mask]
            order = np.lexsort((ids, dists[mask]))
            return ids[order].tolist()

        adjacency = ordered_map(row, range(n), self.params.threads)
        return self.finish(adjacency, degree_bound=None, degree_bounded=False)
