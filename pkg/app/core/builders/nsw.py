"""Incremental NPG builder (navigable small world style insertion)."""

import heapq

import numpy as np

from app.core.builders.base import GraphBuilder
from app.core.distance import DistanceSpace
from app.core.edge_select import CandidatePool, select_neighbors
from app.core.errors import UsageError
from app.core.graph import CompositeGraph
from app.core.logging import get_logger
from app.core.models import ObjectSet

logger = get_logger(__name__)


class NPGNswBuilder(GraphBuilder):
    """Insert objects in index order, linking each to landing-zone neighbors.

    Each insertion runs a greedy search over the partial graph from one random
    existing vertex and keeps the ``l`` closest vertices it visited as the
    candidate pool. Reverse edges are merged into the target's list by
    re-running edge selection over its old neighbors plus the newcomer, which
    keeps both the degree bound and the landing-zone property.

    Insertion is sequential, so ``threads`` has no effect on this builder.
    """

    name = "npg-nsw"

    def build(self, objects: ObjectSet) -> CompositeGraph:
        n = objects.n
        if n < 1:
            raise UsageError("cannot build a graph over an empty object set")
        k, l = self.params.k, self.params.l
        logger.info(f"npg-nsw: n={n}, k={k}, l={l}, seed={self.params.seed}")

        space = self.space(objects)
        rng = np.random.default_rng(self.params.seed)
        adjacency: list[list[int]] = [[] for _ in range(n)]

        for i in range(1, n):
            entry = int(rng.integers(0, i))
            ids, dists = self._collect(space, adjacency, i, entry, l)
            pool = CandidatePool.from_candidates(i, ids, dists)
            adjacency[i] = select_neighbors(pool, k, space)
            for j in adjacency[i]:
                self._link_back(space, adjacency, j, i, k)
            if i % 1000 == 0:
                logger.debug(f"npg-nsw: inserted {i}/{n}")

        return self.finish(adjacency, degree_bound=k)

    @staticmethod
    def _collect(
        space: DistanceSpace,
        adjacency: list[list[int]],
        i: int,
        entry: int,
        l: int,  # noqa: E741
    ) -> tuple[np.ndarray, np.ndarray]:
        """Greedy search for object ``i``; returns the ``l`` closest visited vertices."""
        d0 = float(space.one_to_many(i, [entry])[0])
        visited_ids = [entry]
        visited_d = [d0]
        seen = {entry}
        frontier = [(d0, entry)]
        best = [(-d0, -entry)]

        while frontier:
            d, u = heapq.heappop(frontier)
            if len(best) >= l and (d, u) > (-best[0][0], -best[0][1]):
                break
            fresh = [v for v in adjacency[u] if v not in seen]
            if not fresh:
                continue
            seen.update(fresh)
            dists = space.one_to_many(i, fresh)
            for v, dv in zip(fresh, dists.tolist()):
                visited_ids.append(v)
                visited_d.append(dv)
                if len(best) < l:
                    heapq.heappush(best, (-dv, -v))
                    heapq.heappush(frontier, (dv, v))
                elif (dv, v) < (-best[0][0], -best[0][1]):
                    heapq.heapreplace(best, (-dv, -v))
                    heapq.heappush(frontier, (dv, v))

        ids = np.asarray(visited_ids, dtype=np.int64)
        dists_all = np.asarray(visited_d, dtype=np.float64)
        order = np.lexsort((ids, dists_all))[:l]
        return ids[order], dists_all[order]

    @staticmethod
    def _link_back(
        space: DistanceSpace, adjacency: list[list[int]], j: int, i: int, k: int
    ) -> None:
        if i in adjacency[j]:
            return
        pool = CandidatePool.from_space(j, adjacency[j] + [i], space)
        adjacency[j] = select_neighbors(pool, k, space)
