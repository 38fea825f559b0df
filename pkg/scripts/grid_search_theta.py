#!/usr/bin/env python3
"""Grid search for the threshold composite graph's distance threshold.

Candidate thresholds are quantiles of fused distances between seeded random
pairs. For each one the script builds the threshold graph and reports mean
degree, hybrid Recall@k and mean NDC of greedy search against brute force.
"""

import argparse
import math

import numpy as np

from app.core.builders import build_threshold_graph
from app.core.datasets import generate_attributes, generate_vectors
from app.core.distance import DistanceSpace
from app.core.graph import degree_stats
from app.core.logging import get_logger, setup_logging
from app.core.metrics import recall_at_k
from app.core.models import DistanceMode, ObjectSet, SearchParams
from app.core.oracle import exact_topk_hybrid
from app.core.search import greedy_search

logger = get_logger(__name__)


def candidate_thresholds(
    objects: ObjectSet, mode: DistanceMode, quantiles: list[float], seed: int, pairs: int = 5000
) -> list[float]:
    """Quantiles of the fused distance over random object pairs."""
    rng = np.random.default_rng(seed)
    space = DistanceSpace(objects, mode)
    left = rng.integers(0, objects.n, size=pairs)
    right = rng.integers(0, objects.n, size=pairs)
    keep = left != right
    dists = np.array([space(int(i), int(j)) for i, j in zip(left[keep], right[keep])])
    return [float(np.quantile(dists, q)) for q in quantiles]


def evaluate(
    objects: ObjectSet,
    queries: ObjectSet,
    theta: float,
    mode: DistanceMode,
    params: SearchParams,
) -> dict[str, float]:
    graph = build_threshold_graph(objects, theta, mode)
    recalls, ndcs = [], []
    for i in range(queries.n):
        q = queries.query(i, params.k_results)
        result = greedy_search(graph, objects, q, params)
        recall = recall_at_k(result, exact_topk_hybrid(objects, q, params.k_results), params.k_results)
        if recall is not None:
            recalls.append(recall)
        ndcs.append(result.ndc)
    return {
        "theta": theta,
        "mean_degree": degree_stats(graph).mean,
        "recall": math.fsum(recalls) / len(recalls) if recalls else float("nan"),
        "mean_ndc": math.fsum(ndcs) / len(ndcs),
    }


def main() -> None:
    """Main function."""
    parser = argparse.ArgumentParser(description="Grid search over threshold-graph thresholds")
    parser.add_argument("--n", type=int, default=1000, help="Base objects")
    parser.add_argument("--queries", type=int, default=50, help="Queries")
    parser.add_argument("--d", type=int, default=16, help="Vector dimension")
    parser.add_argument("--cardinalities", default="3,3,3", help="Attribute cardinalities")
    parser.add_argument(
        "--quantiles", default="0.01,0.02,0.05,0.1,0.2", help="Pair-distance quantiles to try"
    )
    parser.add_argument("--pool-size", type=int, default=50, help="Search pool size")
    parser.add_argument("--seed", type=int, default=42, help="Global seed")
    args = parser.parse_args()

    setup_logging()
    cardinalities = [int(c) for c in args.cardinalities.split(",")]
    m = len(cardinalities)
    vectors = generate_vectors(args.n + args.queries, args.d, seed=args.seed)
    objects = ObjectSet.from_arrays(
        vectors[: args.n], generate_attributes(args.n, m, cardinalities, args.seed), cardinalities
    )
    queries = ObjectSet.from_arrays(
        vectors[args.n :],
        generate_attributes(args.queries, m, cardinalities, args.seed + 1),
        cardinalities,
    )
    mode = DistanceMode.fusion()
    params = SearchParams(k_results=10, pool_size=args.pool_size, rng_seed=args.seed)

    quantiles = [float(q) for q in args.quantiles.split(",")]
    print("theta\tmean_degree\trecall\tmean_ndc")
    for theta in candidate_thresholds(objects, mode, quantiles, args.seed):
        row = evaluate(objects, queries, theta, mode, params)
        print(f"{row['theta']:.6f}\t{row['mean_degree']:.2f}\t{row['recall']:.4f}\t{row['mean_ndc']:.1f}")


if __name__ == "__main__":
    main()
