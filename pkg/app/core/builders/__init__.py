"""Graph builders: threshold composite graph, NPG_nsw and NPG_kgraph."""

from app.core.builders.base import GraphBuilder
from app.core.builders.kgraph import NPGKGraphBuilder
from app.core.builders.nsw import NPGNswBuilder
from app.core.builders.threshold import ThresholdGraphBuilder
from app.core.errors import UsageError
from app.core.graph import CompositeGraph
from app.core.models import BuildParams, DistanceMode, ObjectSet

BUILDERS: dict[str, type[GraphBuilder]] = {
    ThresholdGraphBuilder.name: ThresholdGraphBuilder,
    NPGNswBuilder.name: NPGNswBuilder,
    NPGKGraphBuilder.name: NPGKGraphBuilder,
}


def create_builder(
    name: str, params: BuildParams | None = None, mode: DistanceMode | None = None
) -> GraphBuilder:
    """Instantiate a builder by its CLI name."""
    try:
        builder_cls = BUILDERS[name]
    except KeyError:
        raise UsageError(
            f"unknown graph {name!r}; choose one of {sorted(BUILDERS)}"
        ) from None
    return builder_cls(params, mode)


def build_threshold_graph(
    objects: ObjectSet,
    theta_prime: float,
    mode: DistanceMode | None = None,
    max_objects: int | None = None,
) -> CompositeGraph:
    """Connect every pair whose distance is at most ``theta_prime``."""
    params = BuildParams(theta_prime=theta_prime)
    return ThresholdGraphBuilder(params, mode, max_objects=max_objects).build(objects)


def build_npg_nsw(
    objects: ObjectSet, params: BuildParams | None = None, mode: DistanceMode | None = None
) -> CompositeGraph:
    return NPGNswBuilder(params, mode).build(objects)


def build_npg_kgraph(
    objects: ObjectSet, params: BuildParams | None = None, mode: DistanceMode | None = None
) -> CompositeGraph:
    return NPGKGraphBuilder(params, mode).build(objects)


__all__ = [
    "BUILDERS",
    "GraphBuilder",
    "NPGKGraphBuilder",
    "NPGNswBuilder",
    "ThresholdGraphBuilder",
    "build_npg_kgraph",
    "build_npg_nsw",
    "build_threshold_graph",
    "create_builder",
]
