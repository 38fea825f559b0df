"""Brute-force ground truth and the post-filter (Strategy B) baseline."""

from collections.abc import Sequence
from typing import Literal

import numpy as np

from app.core.distance import DistanceSpace, attribute_matches
from app.core.errors import ConfigurationError, UsageError
from app.core.graph import CompositeGraph
from app.core.logging import get_logger
from app.core.models import (
    DistanceMode,
    GroundTruth,
    GroundTruthEntry,
    Hit,
    ObjectSet,
    Query,
    SearchParams,
    SearchResult,
)
from app.core.parallel import ordered_map
from app.core.search import JointPruningSearch

logger = get_logger(__name__)


def _rank(ids: np.ndarray, dists: np.ndarray, k: int) -> GroundTruthEntry:
    order = np.lexsort((ids, dists))[:k]
    return GroundTruthEntry(indices=ids[order].tolist(), distances=dists[order].tolist())


def exact_topk(
    s: ObjectSet, q: Query, k: int, mode: DistanceMode | None = None
) -> GroundTruthEntry:
    """Linear scan for the ``k`` nearest objects under ``mode`` (ties by index)."""
    s.check_query(q)
    space = DistanceSpace(s, mode or DistanceMode.euclidean())
    ids = np.arange(s.n, dtype=np.int64)
    return _rank(ids, space.query_distances(q, ids), k)


def exact_topk_vector(s: ObjectSet, q: Query, k: int) -> GroundTruthEntry:
    """Exact top-``k`` by Euclidean distance, ignoring attributes."""
    return exact_topk(s, q, k, DistanceMode.euclidean())


def exact_topk_hybrid(s: ObjectSet, q: Query, k: int) -> GroundTruthEntry:
    """Exact top-``k`` among objects whose attributes equal the query's.

    Returns fewer than ``k`` entries when matches are scarce, none when
    nothing matches.
    """
    s.check_query(q)
    ids = np.flatnonzero(attribute_matches(s, q.attributes)).astype(np.int64)
    space = DistanceSpace(s, DistanceMode.euclidean())
    return _rank(ids, space.vector_distances(q.vector, ids), k)


def compute_ground_truth(
    s: ObjectSet,
    queries: Sequence[Query],
    k: int,
    flavor: Literal["vector", "hybrid"] = "hybrid",
    threads: int = 1,
) -> GroundTruth:
    """Exact answers for a whole query set.

    Args:
        s: Object set
        queries: Queries (dimensions must match ``s``)
        k: Answers per query
        flavor: ``vector`` ranks everything, ``hybrid`` only exact attribute matches
        threads: Worker count (result independent of it)

    Returns:
        GroundTruth with one entry per query
    """
    if k < 1:
        raise UsageError(f"k must be positive, got {k}")
    if flavor not in ("vector", "hybrid"):
        raise ConfigurationError(f"unknown ground-truth flavor {flavor!r}")
    oracle = exact_topk_vector if flavor == "vector" else exact_topk_hybrid
    k_eff = min(k, s.n)
    entries = ordered_map(lambda q: oracle(s, q, k_eff), queries, threads)
    scarce = sum(1 for e in entries if len(e.indices) < k_eff)
    if scarce:
        logger.info(f"{scarce}/{len(entries)} queries have fewer than {k_eff} matches")
    return GroundTruth(flavor=flavor, k=k, entries=entries)


def strategy_b_search(
    vector_graph: CompositeGraph,
    s: ObjectSet,
    q: Query,
    p: SearchParams | None = None,
    candidate_multiplier: int = 10,
    filter_during_traversal: bool = False,
) -> SearchResult:
    """Vector search on an attribute-blind graph, then exact attribute filtering.

    By default the two-stage search collects ``candidate_multiplier *
    k_results`` vector candidates, at most n, and drops those whose
    attributes differ from the query's. With ``filter_during_traversal`` the attribute check
    runs before any candidate enters the result set instead.

    Returns:
        SearchResult with up to ``k_results`` matching hits; ``ndc`` counts
        vector distances only, ``attribute_checks`` the attribute comparisons
    """
    if vector_graph.distance_mode.is_fusion:
        raise UsageError("strategy B runs on a graph built in euclidean mode")
    if candidate_multiplier < 1:
        raise UsageError(f"candidate multiplier must be >= 1, got {candidate_multiplier}")
    p = p or SearchParams()
    matches = attribute_matches(s, q.attributes)

    if filter_during_traversal:
        search = JointPruningSearch(vector_graph, s, p)
        return search.two_stage(q, admit=lambda v: bool(matches[v]))

    wanted = min(candidate_multiplier * p.k_results, vector_graph.n)
    widened = p.model_copy(
        update={"k_results": wanted, "pool_size": max(p.pool_size, wanted)}
    )
    raw = JointPruningSearch(vector_graph, s, widened).two_stage(q)
    kept = [hit for hit in raw.hits if matches[hit.index]]
    return raw.model_copy(
        update={
            "hits": [Hit(index=h.index, distance=h.distance) for h in kept[: p.k_results]],
            "attribute_checks": len(raw.hits),
        }
    )
