"""Tests for the graph container and graph quality."""

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.distance import DistanceSpace
from app.core.errors import InvariantViolation, UsageError
from app.core.graph import (
    CompositeGraph,
    degree_stats,
    exact_knn,
    graph_quality,
    reachable_from,
)
from app.core.models import DistanceMode
from tests.conftest import complete_graph, make_objects


def brute_force_knn(vectors: np.ndarray, k: int) -> list[list[int]]:
    """Independent exact kNN via a full distance matrix."""
    diff = vectors[:, None, :] - vectors[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    return [np.argsort(row, kind="stable")[:k].tolist() for row in dist]


class TestCompositeGraph:
    """Test graph invariants."""

    def test_adjacency_length_must_match(self):
        """Test n and adjacency length agree."""
        with pytest.raises(ValidationError):
            CompositeGraph(n=3, adjacency=[[1], [0]])

    def test_self_loop(self):
        """Test self-loops are rejected."""
        g = CompositeGraph(n=2, adjacency=[[0], []])
        with pytest.raises(InvariantViolation):
            g.check_invariants()

    def test_duplicate_neighbor(self):
        """Test duplicate neighbors are rejected."""
        g = CompositeGraph(n=3, adjacency=[[1, 1], [], []])
        with pytest.raises(InvariantViolation):
            g.check_invariants()

    def test_out_of_range(self):
        """Test neighbor indices must be < n."""
        g = CompositeGraph(n=2, adjacency=[[5], []])
        with pytest.raises(InvariantViolation):
            g.check_invariants()

    def test_degree_bound(self):
        """Test degree must not exceed the bound."""
        g = CompositeGraph(n=3, adjacency=[[1, 2], [], []], degree_bound=1)
        with pytest.raises(InvariantViolation):
            g.check_invariants()

    def test_valid_graph(self):
        """Test a valid graph passes."""
        complete_graph(5).check_invariants()


class TestGraphQuality:
    """Test graph quality measurement."""

    def test_exact_knn_graph_is_perfect(self):
        """Test the exact kNN graph has quality 1."""
        objects = make_objects(120, 4, seed=1)
        adjacency = brute_force_knn(objects.vectors, 5)
        g = CompositeGraph(n=objects.n, adjacency=adjacency, degree_bound=5)
        report = graph_quality(g, objects)
        assert report.quality == 1.0
        assert report.exact
        assert report.sampled_vertices == objects.n

    def test_empty_adjacency_is_zero(self):
        """Test a graph without edges has quality 0."""
        objects = make_objects(50, 4, seed=2)
        g = CompositeGraph.empty(objects.n, degree_bound=5)
        assert graph_quality(g, objects).quality == 0.0

    def test_matches_independent_computation(self, rng):
        """Test a random 200-vertex graph against a second implementation."""
        objects = make_objects(200, 4, seed=3)
        k = 5
        adjacency = [
            sorted(set(rng.choice([j for j in range(200) if j != i], size=k, replace=False).tolist()))
            for i in range(200)
        ]
        g = CompositeGraph(n=200, adjacency=adjacency, degree_bound=k)
        truth = brute_force_knn(objects.vectors, k)
        expected = np.mean([len(set(adjacency[u]) & set(truth[u])) / k for u in range(200)])
        assert graph_quality(g, objects).quality == pytest.approx(expected, abs=1e-12)

    def test_monotone_when_adding_true_edge(self):
        """Test adding a missing true-kNN edge never lowers quality."""
        objects = make_objects(80, 4, seed=4)
        truth = brute_force_knn(objects.vectors, 4)
        adjacency = [row[:2] for row in truth]
        g = CompositeGraph(n=80, adjacency=adjacency, degree_bound=4)
        before = graph_quality(g, objects).quality
        adjacency[0] = adjacency[0] + [truth[0][2]]
        after = graph_quality(CompositeGraph(n=80, adjacency=adjacency, degree_bound=4), objects)
        assert after.quality >= before

    def test_all_vertices_is_seed_independent(self):
        """Test sample = ALL ignores the seed."""
        objects = make_objects(60, 4, seed=5)
        g = complete_graph(60)
        g = CompositeGraph(n=60, adjacency=[row[:3] for row in g.adjacency], degree_bound=3)
        assert graph_quality(g, objects, seed=1) == graph_quality(g, objects, seed=99)

    def test_sampled_is_deterministic(self):
        """Test a sampled estimate depends only on the seed."""
        objects = make_objects(100, 4, seed=6)
        g = CompositeGraph(n=100, adjacency=brute_force_knn(objects.vectors, 3), degree_bound=3)
        a = graph_quality(g, objects, sample=20, seed=7)
        b = graph_quality(g, objects, sample=20, seed=7, threads=4)
        assert a == b
        assert a.sampled_vertices == 20
        assert not a.exact

    def test_fusion_mode_uses_fused_neighbors(self):
        """Test neighbors are judged in the graph's own geometry."""
        objects = make_objects(80, 4, (2, 2), seed=8)
        mode = DistanceMode.fusion()
        space = DistanceSpace(objects, mode)
        adjacency = [exact_knn(space, u, 4).tolist() for u in range(objects.n)]
        g = CompositeGraph(n=objects.n, adjacency=adjacency, degree_bound=4, distance_mode=mode)
        assert graph_quality(g, objects).quality == 1.0

    def test_empty_graph(self):
        """Test an empty graph is a usage error."""
        objects = make_objects(1, 2, seed=9)
        with pytest.raises(UsageError):
            graph_quality(CompositeGraph(n=0), objects)


class TestDegreeStats:
    """Test degree statistics."""

    def test_empty(self):
        """Test an edgeless graph."""
        stats = degree_stats(CompositeGraph.empty(4))
        assert (stats.min, stats.mean, stats.max) == (0, 0.0, 0)

    def test_complete(self):
        """Test the complete graph on 4 vertices."""
        stats = degree_stats(complete_graph(4))
        assert (stats.min, stats.mean, stats.max) == (3, 3.0, 3)

    def test_bound_violation(self):
        """Test max degree above the bound raises."""
        g = CompositeGraph(n=3, adjacency=[[1, 2], [0], [0]], degree_bound=1)
        with pytest.raises(InvariantViolation):
            degree_stats(g)


class TestReachability:
    """Test breadth-first reachability."""

    def test_chain(self):
        """Test a directed chain."""
        g = CompositeGraph(n=4, adjacency=[[1], [2], [], [0]])
        assert reachable_from(g, 0) == {0, 1, 2}
        assert reachable_from(g, 3) == {0, 1, 2, 3}

    def test_invalid_start(self):
        """Test out-of-range start vertices."""
        with pytest.raises(UsageError):
            reachable_from(CompositeGraph.empty(2), 5)
