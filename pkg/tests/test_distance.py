"""Tests for the Euclidean, attribute and fusion distances."""

import math

import numpy as np
import pytest

from app.core.distance import (
    DistanceSpace,
    attribute_distance,
    attribute_matches,
    euclidean,
    fuse,
    fusion_distance,
)
from app.core.errors import UsageError
from app.core.models import DistanceMode, FusionWeights, ObjectRecord, ObjectSet, Query
from tests.conftest import make_objects


def _point(vector, attributes) -> ObjectRecord:
    return ObjectRecord(
        index=0,
        vector=np.asarray(vector, dtype=np.float64),
        attributes=np.asarray(attributes, dtype=np.int64),
    )


class TestEuclidean:
    """Test Euclidean distance."""

    def test_three_four_five(self):
        """Test the 3-4-5 triangle."""
        assert euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_identity(self):
        """Test distance to itself is zero."""
        a = np.array([0.3, -1.2, 7.5])
        assert euclidean(a, a) == 0.0

    def test_matches_scalar_loop(self, rng):
        """Test 50 random pairs against a plain-Python evaluation."""
        for _ in range(50):
            a, b = rng.standard_normal(8), rng.standard_normal(8)
            expected = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
            assert euclidean(a, b) == pytest.approx(expected, rel=1e-6)

    def test_symmetric(self, rng):
        """Test symmetry holds bit for bit."""
        a, b = rng.standard_normal(16), rng.standard_normal(16)
        assert euclidean(a, b) == euclidean(b, a)

    def test_dimension_mismatch(self):
        """Test mismatched dimensions raise a usage error."""
        with pytest.raises(UsageError):
            euclidean([1.0, 2.0], [1.0, 2.0, 3.0])


class TestAttributeDistance:
    """Test attribute (Hamming) distance."""

    def test_identical(self):
        """Test identical codes."""
        assert attribute_distance([1, 2, 3], [1, 2, 3]) == 0

    def test_all_different(self):
        """Test all positions differ."""
        assert attribute_distance([0, 0, 0], [1, 1, 1]) == 3

    def test_single_mismatch(self):
        """Test a single mismatch."""
        assert attribute_distance([1, 2, 3], [1, 9, 3]) == 1

    def test_triangle_inequality(self, rng):
        """Test the triangle inequality on random code vectors."""
        for _ in range(200):
            a, b, c = (rng.integers(0, 3, size=4) for _ in range(3))
            assert attribute_distance(a, c) <= attribute_distance(a, b) + attribute_distance(b, c)

    def test_dimension_mismatch(self):
        """Test mismatched dimensions raise a usage error."""
        with pytest.raises(UsageError):
            attribute_distance([1, 2], [1, 2, 3])


class TestFusionDistance:
    """Test the fused distance and its weight schemes."""

    def test_recommended_direct_value(self):
        """Test delta=6, chi=2, m=3 gives 10."""
        q = Query(vector=[0.0, 0.0], attributes=[1, 2, 3])
        e = _point([6.0, 0.0], [1, 9, 9])
        assert fusion_distance(q, e, FusionWeights.recommended()) == pytest.approx(10.0)

    def test_recommended_matched_is_delta(self):
        """Test matched attributes leave the vector distance unchanged."""
        a = _point([0.1, 0.7], [2, 1, 0])
        b = _point([1.3, -0.4], [2, 1, 0])
        assert fusion_distance(a, b, FusionWeights.recommended()) == euclidean(a.vector, b.vector)

    def test_recommended_mismatched_is_double(self):
        """Test fully mismatched attributes give exactly twice the vector distance."""
        a = _point([0.1, 0.7], [2, 1, 0])
        b = _point([1.3, -0.4], [0, 0, 1])
        assert fusion_distance(a, b, FusionWeights.recommended()) == 2 * euclidean(a.vector, b.vector)

    def test_recommended_without_attributes(self):
        """Test m=0 reduces to the vector distance."""
        a = _point([0.0, 1.0], [])
        b = _point([2.0, 3.0], [])
        assert fusion_distance(a, b, FusionWeights.recommended()) == euclidean(a.vector, b.vector)

    def test_bounds_over_random_pairs(self, rng):
        """Test delta <= fused <= 2 delta on 10,000 pairs, equality cases included."""
        m = 3
        delta = np.abs(rng.standard_normal(10_000)) * 10
        chi = rng.integers(0, m + 1, size=10_000)
        chi[:100] = 0
        chi[100:200] = m
        fused = fuse(delta, chi, m, FusionWeights.recommended())

        assert np.all(delta <= fused)
        assert np.all(fused <= 2 * delta)
        assert np.array_equal(fused[:100], delta[:100])
        assert np.array_equal(fused[100:200], 2 * delta[100:200])

    def test_fixed_vector_only(self, rng):
        """Test fixed weights (1, 0) equal the Euclidean distance."""
        weights = FusionWeights.fixed(1.0, 0.0)
        for _ in range(20):
            a = _point(rng.standard_normal(5), rng.integers(0, 3, size=3))
            b = _point(rng.standard_normal(5), rng.integers(0, 3, size=3))
            assert fusion_distance(a, b, weights) == euclidean(a.vector, b.vector)

    def test_fixed_attribute_only(self, rng):
        """Test fixed weights (0, 1) equal the attribute distance."""
        weights = FusionWeights.fixed(0.0, 1.0)
        for _ in range(20):
            a = _point(rng.standard_normal(5), rng.integers(0, 3, size=3))
            b = _point(rng.standard_normal(5), rng.integers(0, 3, size=3))
            assert fusion_distance(a, b, weights) == attribute_distance(a.attributes, b.attributes)

    def test_normalized(self):
        """Test max-normalized weights."""
        weights = FusionWeights.normalized(delta_max=4.0)
        fused = fuse(np.array([2.0]), np.array([1]), 2, weights)
        assert fused[0] == pytest.approx(0.5 + 0.5)

    def test_harmonic(self):
        """Test harmonic fusion with and without the chi adjustment."""
        plain = fuse(np.array([2.0, 0.0]), np.array([2, 0]), 3, FusionWeights.harmonic())
        assert plain[0] == pytest.approx(2.0)
        assert plain[1] == 0.0

        adjusted = fuse(np.array([3.0]), np.array([0]), 3, FusionWeights.harmonic(c=2.0))
        assert adjusted[0] == pytest.approx(2 * 3.0 * 1.0 / 4.0)


class TestDistanceSpace:
    """Test the vectorized distance space."""

    @pytest.mark.parametrize("mode", [DistanceMode.euclidean(), DistanceMode.fusion()])
    def test_batch_matches_pairs(self, mode):
        """Test batch and pairwise evaluation are bit-identical."""
        objects = make_objects(60, 8, (3, 3), seed=3)
        space = DistanceSpace(objects, mode)
        ids = np.arange(objects.n)
        batch = space.one_to_many(5, ids)
        for j in range(objects.n):
            assert space(5, j) == batch[j]
            assert space(j, 5) == batch[j]

    def test_fusion_matches_scalar_function(self):
        """Test the space agrees with fusion_distance."""
        objects = make_objects(40, 4, (2, 2, 2), seed=4)
        space = DistanceSpace(objects, DistanceMode.fusion())
        for j in range(objects.n):
            expected = fusion_distance(
                objects.record(0), objects.record(j), FusionWeights.recommended()
            )
            assert space(0, j) == pytest.approx(expected, rel=1e-12)

    def test_counter_counts_rows(self, small_objects):
        """Test the per-query counter counts every evaluated object."""
        space = DistanceSpace(small_objects, DistanceMode.fusion())
        counter = space.counter(small_objects.query(0))
        counter([1, 2, 3])
        counter([4])
        assert counter.count == 4

    def test_attribute_matches(self):
        """Test the exact-match mask."""
        objects = ObjectSet.from_arrays(
            np.zeros((4, 2)), np.array([[0, 1], [0, 0], [0, 1], [1, 1]]), (2, 2)
        )
        assert attribute_matches(objects, [0, 1]).tolist() == [True, False, True, False]
        with pytest.raises(UsageError):
            attribute_matches(objects, [0])
