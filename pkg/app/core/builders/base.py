"""Base graph builder interface."""

from abc import ABC, abstractmethod
from typing import Any

from app.core.distance import DistanceSpace
from app.core.graph import CompositeGraph
from app.core.logging import get_logger
from app.core.models import BuildMeta, BuildParams, DistanceMode, ObjectSet

logger = get_logger(__name__)


class GraphBuilder(ABC):
    """Abstract base class for graph builders."""

    name = "base"

    def __init__(self, params: BuildParams | None = None, mode: DistanceMode | None = None) -> None:
        """Initialize builder with parameters and a distance mode."""
        self.params = params or BuildParams()
        self.mode = mode or DistanceMode.euclidean()

    @abstractmethod
    def build(self, objects: ObjectSet) -> CompositeGraph:
        """Build a graph over ``objects``.

        Args:
            objects: Object set to index

        Returns:
            Graph satisfying the CompositeGraph invariants
        """
        pass

    def space(self, objects: ObjectSet) -> DistanceSpace:
        return DistanceSpace(objects, self.mode)

    def meta(self, **extra: Any) -> BuildMeta:
        """Build provenance; the worker count is left out so it cannot change archives."""
        params = self.params.model_dump(exclude={"threads"})
        params.update(extra)
        return BuildMeta(builder=self.name, params=params, seed=self.params.seed)

    def finish(
        self,
        adjacency: list[list[int]],
        degree_bound: int | None,
        **extra: Any,
    ) -> CompositeGraph:
        """Wrap an adjacency list as a validated graph."""
        graph = CompositeGraph(
            n=len(adjacency),
            adjacency=adjacency,
            degree_bound=degree_bound,
            distance_mode=self.mode,
            build_meta=self.meta(**extra),
        )
        graph.check_invariants()
        logger.info(
            f"{self.name}: built {graph.n} vertices, "
            f"{sum(len(a) for a in adjacency)} edges ({self.mode.kind.value} mode)"
        )
        return graph
