"""Joint-pruning graph search: greedy routing and two-stage routing.

Both searches keep a result set R of at most ``pool_size`` vertices and a
candidate set C ordered by distance to the query. Ties always break by the
lower object index.
"""

import heapq
import math
from collections.abc import Callable, Sequence

import numpy as np

from app.core.distance import DistanceSpace, QueryDistance
from app.core.errors import UsageError
from app.core.graph import CompositeGraph
from app.core.logging import get_logger
from app.core.models import Hit, ObjectSet, Query, SearchParams, SearchResult

logger = get_logger(__name__)

Admit = Callable[[int], bool]


class _RoutingState:
    """Result set, candidate set and bookkeeping of one query."""

    def __init__(
        self,
        graph: CompositeGraph,
        dist: QueryDistance,
        pool_size: int,
        admit: Admit | None = None,
    ) -> None:
        self.graph = graph
        self.dist = dist
        self.pool_size = pool_size
        self.admit = admit
        self.result: list[tuple[float, int]] = []  # max-heap on (d, v) via negation
        self.candidates: list[tuple[float, int]] = []
        self.evaluated: set[int] = set()
        self.expanded: set[int] = set()
        self.partial: set[int] = set()
        self.path: list[int] = []
        self.attribute_checks = 0

    @property
    def full(self) -> bool:
        return len(self.result) >= self.pool_size

    def worst(self) -> tuple[float, int]:
        d, v = self.result[0]
        return -d, -v

    def can_improve(self) -> bool:
        """True while some candidate is no worse than the current worst result."""
        if not self.candidates:
            return False
        return not self.full or self.candidates[0] <= self.worst()

    def offer(self, ids: Sequence[int]) -> bool:
        """Evaluate the not-yet-evaluated ``ids``; return True if R changed."""
        fresh = [v for v in ids if v not in self.evaluated]
        if not fresh:
            return False
        self.evaluated.update(fresh)
        dists = self.dist(fresh).tolist()

        updated = False
        for v, d in zip(fresh, dists):
            if self.full and (d, v) >= self.worst():
                continue
            heapq.heappush(self.candidates, (d, v))
            if self.admit is not None:
                self.attribute_checks += 1
                if not self.admit(v):
                    continue
            if self.full:
                heapq.heapreplace(self.result, (-d, -v))
            else:
                heapq.heappush(self.result, (-d, -v))
            updated = True
        return updated

    def expand(self, u: int, sample: int | None, rng: np.random.Generator | None) -> bool:
        """Evaluate ``u``'s neighbors, or a random ``sample`` of them."""
        nbrs = self.graph.adjacency[u]
        if sample is not None and len(nbrs) > sample:
            assert rng is not None
            picked = np.sort(rng.choice(len(nbrs), size=sample, replace=False))
            nbrs = [nbrs[t] for t in picked]
            self.partial.add(u)
        else:
            self.expanded.add(u)
            self.partial.discard(u)
        self.path.append(u)
        return self.offer(nbrs)

    def route(
        self,
        sample: int | None = None,
        rng: np.random.Generator | None = None,
        stop_at_local_optimum: bool = False,
    ) -> int:
        """Extract-and-expand until R stops improving; returns hops taken."""
        hops = 0
        while self.candidates:
            _, u = heapq.heappop(self.candidates)
            if u in self.expanded or (sample is not None and u in self.partial):
                continue
            hops += 1
            updated = self.expand(u, sample, rng)
            if not updated and (stop_at_local_optimum or not self.can_improve()):
                break
        return hops

    def hits(self, k_results: int) -> list[Hit]:
        ranked = sorted((-d, -v) for d, v in self.result)
        return [Hit(index=v, distance=d) for d, v in ranked[:k_results]]


class JointPruningSearch:
    """Searches one graph over one object set.

    Read-only over the graph and objects, so one instance can serve queries
    from several threads.
    """

    def __init__(
        self,
        graph: CompositeGraph,
        objects: ObjectSet,
        params: SearchParams | None = None,
    ) -> None:
        if graph.n == 0:
            raise UsageError("cannot search an empty graph")
        graph.check_aligned(objects)
        self.graph = graph
        self.objects = objects
        self.params = params or SearchParams()
        self.space = DistanceSpace(objects, graph.distance_mode)

    def _prepare(
        self, query: Query, entry_points: Sequence[int] | None, admit: Admit | None
    ) -> tuple[_RoutingState, np.random.Generator, int]:
        self.objects.check_query(query)
        p = self.params
        k_results = p.k_results
        if k_results > self.graph.n:
            logger.warning(
                f"k_results={k_results} exceeds n={self.graph.n}; clamping to {self.graph.n}"
            )
            k_results = self.graph.n

        rng = np.random.default_rng(p.rng_seed)
        if entry_points is None:
            seeds = min(p.seeds, self.graph.n)
            entries = rng.choice(self.graph.n, size=seeds, replace=False).tolist()
        else:
            entries = list(dict.fromkeys(int(e) for e in entry_points))
            if not entries or any(not 0 <= e < self.graph.n for e in entries):
                raise UsageError(f"invalid entry points {entries}")

        state = _RoutingState(
            self.graph, self.space.counter(query), max(p.pool_size, k_results), admit
        )
        state.offer(entries)
        return state, rng, k_results

    @staticmethod
    def _result(state: _RoutingState, k_results: int, stage1: int, stage2: int) -> SearchResult:
        return SearchResult(
            hits=state.hits(k_results),
            ndc=state.dist.count,
            hops=stage1 + stage2,
            stage1_hops=stage1,
            stage2_hops=stage2,
            path=state.path,
            attribute_checks=state.attribute_checks,
        )

    def greedy(
        self,
        query: Query,
        entry_points: Sequence[int] | None = None,
        admit: Admit | None = None,
    ) -> SearchResult:
        """Best-first search expanding every neighbor of each extracted vertex.

        Stops after an extraction that leaves R unchanged once no remaining
        candidate could still enter R.
        """
        state, _, k_results = self._prepare(query, entry_points, admit)
        hops = state.route()
        return self._result(state, k_results, hops, 0)

    def two_stage(
        self,
        query: Query,
        entry_points: Sequence[int] | None = None,
        admit: Admit | None = None,
    ) -> SearchResult:
        """Sampled routing to a local optimum, then full expansion from C and R.

        Stage 1 evaluates ``ceil(k / h)`` random neighbors of each extracted
        vertex (``k`` is the graph's degree bound) and ends at the first
        extraction that leaves R unchanged. Stage 2 re-queues the members of
        R that were only partially expanded and continues as the greedy
        search. With ``h = 1`` this is exactly the greedy search.
        """
        k = self.graph.routing_degree
        h = self.params.h
        if h > k:
            raise UsageError(f"h={h} must not exceed the degree bound {k}")
        sample = math.ceil(k / h)

        state, rng, k_results = self._prepare(query, entry_points, admit)
        stage1 = state.route(sample=sample, rng=rng, stop_at_local_optimum=True)

        for neg_d, neg_v in state.result:
            if -neg_v in state.partial:
                heapq.heappush(state.candidates, (-neg_d, -neg_v))
        stage2 = state.route() if state.can_improve() else 0
        return self._result(state, k_results, stage1, stage2)


def greedy_search(
    g: CompositeGraph,
    s: ObjectSet,
    q: Query,
    p: SearchParams | None = None,
    entry_points: Sequence[int] | None = None,
) -> SearchResult:
    """Greedy joint-pruning search under the graph's distance mode."""
    return JointPruningSearch(g, s, p).greedy(q, entry_points)


def two_stage_search(
    g: CompositeGraph,
    s: ObjectSet,
    q: Query,
    p: SearchParams | None = None,
    entry_points: Sequence[int] | None = None,
) -> SearchResult:
    """Two-stage joint-pruning search under the graph's distance mode."""
    return JointPruningSearch(g, s, p).two_stage(q, entry_points)


def hybrid_query(
    index: CompositeGraph,
    s: ObjectSet,
    q: Query,
    p: SearchParams | None = None,
    entry_points: Sequence[int] | None = None,
) -> SearchResult:
    """Hybrid top-k over a composite index built with the fusion distance.

    Hits are the fused nearest objects; they are not filtered by attribute.
    """
    if not index.distance_mode.is_fusion:
        raise UsageError("hybrid_query needs an index built in fusion mode")
    return two_stage_search(index, s, q, p, entry_points)
