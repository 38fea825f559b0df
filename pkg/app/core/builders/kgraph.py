"""Iterative-refinement NPG builder (neighbors of neighbors are likely neighbors)."""

import numpy as np

from app.core.builders.base import GraphBuilder
from app.core.distance import DistanceSpace
from app.core.edge_select import CandidatePool, select_neighbors
from app.core.errors import UsageError
from app.core.graph import CompositeGraph, exact_knn
from app.core.logging import get_logger
from app.core.models import BuildParams, DistanceMode, ObjectSet
from app.core.parallel import ordered_map

logger = get_logger(__name__)


class NPGKGraphBuilder(GraphBuilder):
    """Refine random candidate pools until the candidate graph is good enough.

    Every vertex starts with ``l`` random candidates. Each round reads the
    previous round's pools and gives every vertex the ``l`` closest among its
    own candidates and its candidates' candidates, which is the same as
    letting each closer neighbor-of-neighbor replace the current farthest
    candidate. Rounds stop once the sampled quality of the candidate graph
    reaches ``quality_threshold``, when no pool changes, or after
    ``max_iterations``. Edge selection then turns each pool into a neighbor
    list.

    Attributes:
        quality_history: Quality estimate before the first round and after each round
        rounds: Refinement rounds run by the last build
    """

    name = "npg-kgraph"

    def __init__(
        self, params: BuildParams | None = None, mode: DistanceMode | None = None
    ) -> None:
        super().__init__(params, mode)
        self.quality_history: list[float] = []
        self.rounds = 0
        self._pools: list[CandidatePool] = []

    def build(self, objects: ObjectSet) -> CompositeGraph:
        n = objects.n
        if n < 1:
            raise UsageError("cannot build a graph over an empty object set")
        p = self.params
        logger.info(
            f"npg-kgraph: n={n}, k={p.k}, l={p.l}, "
            f"threshold={p.quality_threshold}, seed={p.seed}, threads={p.threads}"
        )
        space = self.space(objects)
        self.quality_history = []
        self.rounds = 0

        if n - 1 <= p.l:
            logger.info("npg-kgraph: pool covers every object, using exhaustive candidates")
            all_ids = np.arange(n, dtype=np.int64)
            pools = ordered_map(
                lambda i: CandidatePool.from_space(i, all_ids, space), range(n), p.threads
            )
            self.quality_history.append(1.0)
        else:
            pools = self._refine(space, n)

        self._pools = pools
        adjacency = ordered_map(
            lambda i: select_neighbors(pools[i], p.k, space), range(n), p.threads
        )
        return self.finish(
            adjacency,
            degree_bound=p.k,
            rounds=self.rounds,
            estimated_quality=self.quality_history[-1],
        )

    def _refine(self, space: DistanceSpace, n: int) -> list[CandidatePool]:
        p = self.params

        def initial(i: int) -> CandidatePool:
            rng = np.random.default_rng([p.seed, i])
            x = rng.choice(n - 1, size=p.l, replace=False)
            return CandidatePool.from_space(i, x + (x >= i), space)

        pools = ordered_map(initial, range(n), p.threads)

        k_eff = min(p.k, n - 1)
        if n <= p.quality_sample:
            sampled = np.arange(n, dtype=np.int64)
        else:
            rng = np.random.default_rng(p.seed)
            sampled = np.sort(rng.choice(n, size=p.quality_sample, replace=False))
        truth = ordered_map(lambda u: exact_knn(space, int(u), k_eff), sampled, p.threads)

        def estimate(current: list[CandidatePool]) -> float:
            hits = sum(
                len(np.intersect1d(current[int(u)].ids[:k_eff], t))
                for u, t in zip(sampled, truth)
            )
            return hits / (k_eff * len(sampled))

        def merge(i: int) -> CandidatePool:
            own = pools[i].ids
            ids = np.concatenate([own] + [pools[int(j)].ids for j in own])
            ids = np.unique(ids[ids != i])
            merged = CandidatePool.from_candidates(i, ids, space.one_to_many(i, ids))
            return CandidatePool(owner=i, ids=merged.ids[: p.l], dists=merged.dists[: p.l])

        self.quality_history.append(estimate(pools))
        logger.debug(f"npg-kgraph: initial quality estimate {self.quality_history[-1]:.4f}")

        while self.quality_history[-1] < p.quality_threshold and self.rounds < p.max_iterations:
            refined = ordered_map(merge, range(n), p.threads)
            changed = any(
                not np.array_equal(old.ids, new.ids) for old, new in zip(pools, refined)
            )
            pools = refined
            self.rounds += 1
            self.quality_history.append(estimate(pools))
            logger.debug(
                f"npg-kgraph: round {self.rounds} quality estimate "
                f"{self.quality_history[-1]:.4f}"
            )
            if not changed:
                logger.info("npg-kgraph: pools stopped changing")
                break

        if self.quality_history[-1] < p.quality_threshold:
            logger.warning(
                f"npg-kgraph: quality estimate {self.quality_history[-1]:.4f} "
                f"below threshold {p.quality_threshold} after {self.rounds} rounds"
            )
        else:
            logger.info(
                f"npg-kgraph: quality estimate {self.quality_history[-1]:.4f} "
                f"after {self.rounds} rounds"
            )
        return pools

    def candidate_graph(self) -> CompositeGraph:
        """The ``k`` nearest pool members of each vertex from the last build, without edge selection."""
        if not self._pools:
            raise UsageError("no build has run yet")
        return CompositeGraph(
            n=len(self._pools),
            adjacency=[pool.ids[: self.params.k].tolist() for pool in self._pools],
            degree_bound=self.params.k,
            distance_mode=self.mode,
        )
