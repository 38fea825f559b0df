"""Tests for greedy and two-stage joint-pruning search."""

import logging

import numpy as np
import pytest

from app.core.builders import build_npg_kgraph
from app.core.distance import DistanceSpace
from app.core.errors import UsageError
from app.core.graph import CompositeGraph
from app.core.metrics import recall_at_k
from app.core.models import BuildParams, DistanceMode, ObjectSet, Query, SearchParams
from app.core.oracle import exact_topk, exact_topk_hybrid, exact_topk_vector
from app.core.search import (
    JointPruningSearch,
    greedy_search,
    hybrid_query,
    two_stage_search,
)
from tests.conftest import complete_graph, make_objects, make_queries


def mean_recall(results, truths, k: int = 10) -> float:
    values = [recall_at_k(r, t, k) for r, t in zip(results, truths)]
    values = [v for v in values if v is not None]
    return float(np.mean(values))


@pytest.fixture(scope="module")
def vector_workload():
    """1,000 gaussian 8-d objects, an NPG_kgraph over them and 40 queries."""
    objects = make_objects(1000, 8, seed=21)
    graph = build_npg_kgraph(objects, BuildParams(k=12, l=40, seed=3))
    queries = make_queries(40, 8, seed=22)
    truths = [exact_topk_vector(objects, q, 10) for q in queries]
    return objects, graph, queries, truths


def toy_line() -> tuple[CompositeGraph, ObjectSet, Query]:
    """Seven 1-D objects routed toward a query at the origin."""
    objects = ObjectSet.from_arrays(np.array([[1.0], [0.9], [0.8], [0.7], [0.5], [0.3], [0.6]]))
    graph = CompositeGraph(
        n=7,
        adjacency=[[1, 2, 3, 4], [0], [0], [0], [0, 5], [4, 6], [0]],
        degree_bound=4,
    )
    return graph, objects, Query(vector=[0.0], k_results=1)


class TestExhaustiveLimit:
    """Test search on a complete graph equals the linear scan."""

    @pytest.mark.parametrize("mode", [DistanceMode.euclidean(), DistanceMode.fusion()])
    def test_complete_graph_matches_oracle(self, mode):
        """Test 50 queries against exact_topk with zero tolerance."""
        objects = make_objects(500, 8, (3, 3), seed=23)
        graph = complete_graph(500, mode)
        params = SearchParams(k_results=10, pool_size=500)
        search = JointPruningSearch(graph, objects, params)
        for q in make_queries(50, 8, (3, 3), seed=24):
            result = search.greedy(q)
            truth = exact_topk(objects, q, 10, mode)
            assert result.indices == truth.indices
            assert [h.distance for h in result.hits] == truth.distances


class TestGreedy:
    """Test the greedy search."""

    def test_toy_walkthrough(self):
        """Test the route 0 -> 4 -> 5 and the top-1 answer."""
        graph, objects, query = toy_line()
        params = SearchParams(k_results=1, pool_size=1)
        result = greedy_search(graph, objects, query, params, entry_points=[0])
        assert result.path == [0, 4, 5]
        assert result.indices == [5]
        assert result.hits[0].distance == pytest.approx(0.3)
        # entry, four neighbors of 0, one fresh neighbor each of 4 and 5
        assert result.ndc == 7

    def test_recall(self, vector_workload):
        """Test greedy recall@10 on a 1,000-object graph."""
        objects, graph, queries, truths = vector_workload
        search = JointPruningSearch(graph, objects, SearchParams(k_results=10, pool_size=100))
        results = [search.greedy(q) for q in queries]
        assert mean_recall(results, truths) >= 0.9

    def test_local_optimality(self, vector_workload):
        """Test no neighbor of the last expanded vertex beats the returned worst hit."""
        objects, graph, queries, _ = vector_workload
        space = DistanceSpace(objects, graph.distance_mode)
        search = JointPruningSearch(graph, objects, SearchParams(k_results=10, pool_size=10))
        for q in queries[:10]:
            result = search.greedy(q)
            worst = result.hits[-1].distance
            last = result.path[-1]
            dists = space.query_distances(q, graph.adjacency[last])
            for v, d in zip(graph.adjacency[last], dists):
                assert v in result.indices or d >= worst

    def test_hits_sorted(self, vector_workload):
        """Test hits ascend by (distance, index)."""
        objects, graph, queries, _ = vector_workload
        result = greedy_search(graph, objects, queries[0], SearchParams(k_results=10, pool_size=50))
        keys = [(h.distance, h.index) for h in result.hits]
        assert keys == sorted(keys)
        assert len(set(result.indices)) == len(result.indices)


class TestTwoStage:
    """Test the two-stage search."""

    def test_h1_equals_greedy(self, vector_workload):
        """Test h = 1 reproduces greedy exactly under the same seed."""
        objects, graph, queries, _ = vector_workload
        params = SearchParams(k_results=10, pool_size=40, h=1, rng_seed=5)
        search = JointPruningSearch(graph, objects, params)
        for q in queries[:15]:
            a, b = search.greedy(q), search.two_stage(q)
            assert a.hits == b.hits
            assert a.ndc == b.ndc
            assert a.path == b.path
            assert a.hops == b.hops

    def test_stage_one_samples(self, monkeypatch):
        """Test k = 4, h = 2 evaluates two neighbors per stage-1 hop."""
        vectors = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [-3.0, 0.0], [0.0, -4.0]])
        objects = ObjectSet.from_arrays(vectors)
        graph = CompositeGraph(n=5, adjacency=[[1, 2, 3, 4], [0], [0], [0], [0]], degree_bound=4)
        batches = []
        original = DistanceSpace.query_distances

        def recording(self, query, ids):
            batches.append(len(ids))
            return original(self, query, ids)

        monkeypatch.setattr(DistanceSpace, "query_distances", recording)
        params = SearchParams(k_results=1, pool_size=1, h=2)
        result = two_stage_search(graph, objects, Query(vector=[0.0, 0.0]), params, entry_points=[0])
        assert batches == [1, 2, 2]
        assert result.indices == [0]
        assert result.stage1_hops == 1
        assert result.stage2_hops == 1

    def test_recall(self, vector_workload):
        """Test two-stage recall@10 on a 1,000-object graph."""
        objects, graph, queries, truths = vector_workload
        search = JointPruningSearch(graph, objects, SearchParams(k_results=10, pool_size=100, h=2))
        results = [search.two_stage(q) for q in queries]
        assert mean_recall(results, truths) >= 0.9

    def test_pool_size_monotone(self, vector_workload):
        """Test recall does not drop as the pool grows."""
        objects, graph, queries, truths = vector_workload
        recalls = []
        for pool in (10, 20, 40, 80):
            search = JointPruningSearch(graph, objects, SearchParams(k_results=10, pool_size=pool))
            recalls.append(mean_recall([search.two_stage(q) for q in queries], truths))
        assert all(b >= a - 0.01 for a, b in zip(recalls, recalls[1:]))

    def test_deterministic(self, vector_workload):
        """Test repeated searches are identical."""
        objects, graph, queries, _ = vector_workload
        params = SearchParams(k_results=10, pool_size=30, seeds=3, rng_seed=11)
        a = [two_stage_search(graph, objects, q, params) for q in queries[:5]]
        b = [two_stage_search(graph, objects, q, params) for q in queries[:5]]
        assert a == b

    def test_h_above_degree(self):
        """Test h larger than the degree bound is a usage error."""
        graph, objects, query = toy_line()
        with pytest.raises(UsageError):
            two_stage_search(graph, objects, query, SearchParams(k_results=1, pool_size=1, h=5))


class TestSearchAccounting:
    """Test distance counting and argument handling."""

    def test_ndc_counts_every_evaluation(self, monkeypatch, small_objects, small_queries):
        """Test ndc equals the number of distances the space evaluated."""
        graph = build_npg_kgraph(small_objects, BuildParams(k=8, l=24), DistanceMode.fusion())
        evaluated = []
        original = DistanceSpace.query_distances

        def counting(self, query, ids):
            evaluated.append(len(ids))
            return original(self, query, ids)

        monkeypatch.setattr(DistanceSpace, "query_distances", counting)
        for q in small_queries[:5]:
            evaluated.clear()
            result = two_stage_search(graph, small_objects, q, SearchParams(pool_size=30))
            assert result.ndc == sum(evaluated)
            assert result.ndc <= small_objects.n

    def test_clamps_k_to_n(self, caplog):
        """Test k_results above n returns n hits with a warning."""
        objects = make_objects(20, 3, seed=25)
        graph = complete_graph(20)
        params = SearchParams(k_results=50, pool_size=50)
        with caplog.at_level(logging.WARNING):
            result = greedy_search(graph, objects, make_queries(1, 3, k_results=50)[0], params)
        assert len(result.hits) == 20
        assert "clamping" in caplog.text

    def test_empty_graph(self):
        """Test searching an empty graph is a usage error."""
        objects = ObjectSet.from_arrays(np.zeros((0, 2)))
        with pytest.raises(UsageError):
            JointPruningSearch(CompositeGraph(n=0), objects)

    def test_misaligned_graph(self):
        """Test a graph over a different object count is rejected."""
        with pytest.raises(UsageError):
            JointPruningSearch(complete_graph(5), make_objects(6, 2))

    def test_query_dimension(self, small_objects):
        """Test a query of the wrong dimension is rejected."""
        graph = complete_graph(small_objects.n)
        with pytest.raises(UsageError):
            greedy_search(graph, small_objects, Query(vector=[0.0, 1.0], attributes=[0, 0]))

    def test_invalid_entry_point(self):
        """Test entry points must be vertices of the graph."""
        graph, objects, query = toy_line()
        with pytest.raises(UsageError):
            greedy_search(graph, objects, query, entry_points=[9])


class TestHybridQuery:
    """Test hybrid top-k over a fusion-mode index."""

    def test_needs_fusion_index(self, small_objects, small_queries):
        """Test a euclidean graph is refused."""
        graph = complete_graph(small_objects.n)
        with pytest.raises(UsageError):
            hybrid_query(graph, small_objects, small_queries[0])

    def test_no_attributes_matches_vector_search(self):
        """Test m = 0 gives the same answer in fusion and euclidean mode."""
        objects = make_objects(300, 6, seed=26)
        graph = build_npg_kgraph(objects, BuildParams(k=8, l=24))
        fused = graph.model_copy(update={"distance_mode": DistanceMode.fusion()})
        params = SearchParams(k_results=10, pool_size=40)
        for q in make_queries(10, 6, seed=27):
            a = two_stage_search(graph, objects, q, params)
            b = hybrid_query(fused, objects, q, params)
            assert a.hits == b.hits
            assert a.ndc == b.ndc

    def test_zero_match_query_returns_fused_nearest(self):
        """Test a query matching no object still returns k hits."""
        vectors = make_objects(200, 4, seed=28).vectors
        objects = ObjectSet.from_arrays(vectors, np.zeros((200, 2), dtype=np.int64), (2, 2))
        graph = complete_graph(200, DistanceMode.fusion())
        query = Query(vector=np.zeros(4), attributes=[1, 1], k_results=5)
        result = hybrid_query(graph, objects, query, SearchParams(k_results=5, pool_size=20, h=1))

        assert exact_topk_hybrid(objects, query, 5).indices == []
        assert len(result.hits) == 5
        assert result.indices == exact_topk(objects, query, 5, DistanceMode.fusion()).indices


@pytest.mark.slow
class TestSearchAtScale:
    """Longer directional comparisons."""

    def test_two_stage_uses_fewer_distances(self):
        """Test two-stage needs no more distances than greedy on most queries."""
        objects = make_objects(5000, 16, seed=29)
        graph = build_npg_kgraph(objects, BuildParams(k=20, l=60, seed=8))
        queries = make_queries(100, 16, seed=30)
        truths = [exact_topk_vector(objects, q, 10) for q in queries]
        params = SearchParams(k_results=10, pool_size=80, h=2)
        search = JointPruningSearch(graph, objects, params)

        greedy = [search.greedy(q) for q in queries]
        staged = [search.two_stage(q) for q in queries]
        assert mean_recall(greedy, truths) >= 0.9
        assert mean_recall(staged, truths) >= 0.9
        cheaper = sum(s.ndc <= g.ndc for s, g in zip(staged, greedy))
        assert cheaper >= 70

    @pytest.fixture(scope="class")
    def hybrid_workload(self):
        """2000 fused 64-d objects, 50 queries and their filtered truth."""
        cards = (3, 3, 3)
        objects = make_objects(2000, 64, cards, seed=31)
        graph = build_npg_kgraph(objects, BuildParams(k=20, l=60, seed=9), DistanceMode.fusion())
        queries = make_queries(50, 64, cards, seed=32)
        truths = [exact_topk_hybrid(objects, q, 10) for q in queries]
        return objects, graph, queries, truths

    @pytest.mark.parametrize("pool_size, target", [(300, 0.95), (1000, 0.99)])
    def test_hybrid_recall(self, hybrid_workload, pool_size, target):
        """Test fused search reaches the recall@10 target against the filtered oracle."""
        objects, graph, queries, truths = hybrid_workload
        params = SearchParams(k_results=10, pool_size=pool_size, h=2)
        results = [hybrid_query(graph, objects, q, params) for q in queries]
        assert mean_recall(results, truths) >= target
