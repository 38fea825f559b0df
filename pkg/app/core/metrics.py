"""Evaluation metrics."""

import math

from app.core.distance import attribute_matches
from app.core.errors import UsageError
from app.core.models import GroundTruthEntry, ObjectSet, Query, SearchResult


def recall_at_k(result: SearchResult, truth: GroundTruthEntry, k: int) -> float | None:
    """Fraction of the true top-``k`` found among the first ``k`` hits.

    The denominator is ``min(k, |truth|)`` so scarce hybrid matches are not
    penalized. Returns ``None`` when the truth is empty; such queries are
    left out of aggregate recall.
    """
    if k < 1:
        raise UsageError(f"k must be positive, got {k}")
    truth_ids = set(truth.indices[:k])
    if not truth_ids:
        return None
    found = set(result.indices[:k])
    return len(found & truth_ids) / min(k, len(truth_ids))


def selectivity(s: ObjectSet, q: Query) -> float:
    """``1 - |matches| / n``: share of objects excluded by the attribute constraint."""
    if s.n == 0:
        raise UsageError("selectivity of an empty object set is undefined")
    return 1.0 - int(attribute_matches(s, q.attributes).sum()) / s.n


def speedup(n: int, mean_ndc: float) -> float:
    """Objects per distance computation, ``n / mean(ndc)``."""
    if mean_ndc <= 0:
        return math.inf
    return n / mean_ndc


def qps(num_queries: int, total_time: float) -> float:
    """Queries per second of search wall time."""
    if total_time <= 0:
        return math.inf
    return num_queries / total_time
