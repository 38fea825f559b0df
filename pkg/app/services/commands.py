"""Implementations of the ``nhq`` subcommands.

Each command takes a fully merged RunConfig, writes its artifacts and prints
a short summary (or, for ``search``, the result listing) to stdout.
"""

import sys
import time
from pathlib import Path
from typing import TextIO

import numpy as np

from app.core.archive import load_index, save_index
from app.core.builders import create_builder
from app.core.config import settings
from app.core.datasets import (
    generate_attributes,
    load_object_set,
    read_fvecs,
    read_ground_truth,
    synthetic_schema,
    write_attributes,
    write_ground_truth,
)
from app.core.distance import DistanceSpace
from app.core.edge_select import verify_landing_zone
from app.core.errors import ConfigurationError, InvariantViolation, UsageError
from app.core.graph import CompositeGraph, degree_stats, graph_quality, reachable_from
from app.core.logging import get_logger
from app.core.models import (
    DistanceKind,
    DistanceMode,
    ObjectSet,
    Query,
    RunConfig,
    WeightScheme,
)
from app.core.oracle import compute_ground_truth
from app.core.search import JointPruningSearch
from app.services.benchmark import pool_sweep, run_benchmark, write_report

logger = get_logger(__name__)


def _require(value: str | None, flag: str) -> str:
    if not value:
        raise UsageError(f"{flag} is required")
    return value


def _objects(config: RunConfig, need_attributes: bool = False) -> ObjectSet:
    vectors = _require(config.vectors, "--vectors")
    if need_attributes and not config.attributes:
        raise ConfigurationError("fusion mode needs --attributes")
    return load_object_set(vectors, config.attributes)


def _queries(config: RunConfig, objects: ObjectSet) -> list[Query]:
    path = _require(config.queries, "--queries")
    if objects.dim_a and not config.query_attributes:
        raise ConfigurationError("objects carry attributes; --query-attributes is required")
    qset = load_object_set(path, config.query_attributes, schema=objects.attr_schema)
    if qset.dim_v != objects.dim_v or qset.dim_a != objects.dim_a:
        raise ConfigurationError(
            f"queries are {qset.dim_v}-d with {qset.dim_a} attributes, "
            f"objects are {objects.dim_v}-d with {objects.dim_a}"
        )
    return [qset.query(i, config.search.k_results) for i in range(qset.n)]


def estimate_delta_max(objects: ObjectSet, seed: int, sample: int = 256) -> float:
    """Largest vector distance from a seeded sample of objects to all objects."""
    rng = np.random.default_rng(seed)
    picked = rng.choice(objects.n, size=min(sample, objects.n), replace=False)
    space = DistanceSpace(objects, DistanceMode.euclidean())
    all_ids = np.arange(objects.n)
    delta_max = max(float(space.vector_distances(objects.vectors[i], all_ids).max()) for i in picked)
    return delta_max if delta_max > 0 else 1.0


def cmd_build(config: RunConfig, out: TextIO = sys.stdout) -> CompositeGraph:
    """Build an index and write it as an archive."""
    target = _require(config.out, "--out")
    fusion = config.mode is DistanceKind.FUSION
    objects = _objects(config, need_attributes=fusion)

    delta_max = None
    if fusion and config.weights is WeightScheme.NORMALIZED:
        delta_max = estimate_delta_max(objects, config.seed)
        logger.info(f"normalized weights: estimated delta_max={delta_max:.6g}")
    mode = config.distance_mode(delta_max)

    builder = create_builder(config.graph, config.build, mode)
    start = time.perf_counter()
    graph = builder.build(objects)
    elapsed = time.perf_counter() - start

    if config.verify and graph.degree_bound is not None:
        violations = verify_landing_zone(graph.adjacency, DistanceSpace(objects, mode))
        if violations:
            raise InvariantViolation(
                f"{len(violations)} landing-zone violations, first {violations[0]}"
            )

    archive = save_index(target, graph, objects.attr_schema)
    stats = degree_stats(graph)
    quality = graph_quality(
        graph,
        objects,
        sample=min(settings.graph_quality_sample, graph.n),
        seed=config.seed,
        threads=config.build.threads,
    )
    reached = len(reachable_from(graph, 0))
    print(f"graph\t{config.graph}", file=out)
    print(f"mode\t{mode.kind.value}", file=out)
    print(f"build_seconds\t{elapsed:.3f}", file=out)
    print(f"degree\tmin={stats.min} mean={stats.mean:.2f} max={stats.max}", file=out)
    print(
        f"quality\t{quality.quality:.4f} (k={quality.k_used}, "
        f"{quality.sampled_vertices} vertices, stderr {quality.std_error:.4f})",
        file=out,
    )
    print(f"reachable_from_0\t{reached}/{graph.n}", file=out)
    print(f"checksum\t{archive.checksum}", file=out)
    return graph


def cmd_gt(config: RunConfig, out: TextIO = sys.stdout) -> Path:
    """Compute exact ground truth for a query file."""
    target = _require(config.out, "--out")
    objects = _objects(config)
    queries = _queries(config, objects)
    truth = compute_ground_truth(
        objects, queries, config.search.k_results, config.flavor, config.build.threads
    )
    path = write_ground_truth(target, truth)
    print(f"ground_truth\t{path}\t{config.flavor}\tk={truth.k}\tqueries={len(queries)}", file=out)
    return path


def cmd_search(config: RunConfig, out: TextIO = sys.stdout) -> None:
    """Search an index and print ``query, rank, index, distance`` rows plus NDC."""
    archive = load_index(_require(config.index, "--index"))
    graph = archive.graph
    objects = load_object_set(
        _require(config.vectors, "--vectors"), config.attributes, schema=archive.attr_schema
    )
    if graph.n != objects.n:
        raise ConfigurationError(f"index has {graph.n} vertices, object set has {objects.n}")
    queries = _queries(config, objects)

    search = JointPruningSearch(graph, objects, config.search)
    print("query\trank\tindex\tdistance", file=out)
    for qi, q in enumerate(queries):
        result = search.two_stage(q)
        for rank, hit in enumerate(result.hits):
            print(f"{qi}\t{rank}\t{hit.index}\t{hit.distance:.6f}", file=out)
        print(f"# query {qi}: ndc={result.ndc} hops={result.hops}", file=out)


def cmd_bench(config: RunConfig, out: TextIO = sys.stdout) -> Path:
    """Run a benchmark sweep and write the TSV report."""
    report_path = _require(config.report, "--report")
    truth = read_ground_truth(_require(config.gt, "--gt"))

    graph = None
    schema = None
    if config.method != "oracle":
        archive = load_index(_require(config.index, "--index"))
        graph, schema = archive.graph, archive.attr_schema
    objects = load_object_set(
        _require(config.vectors, "--vectors"), config.attributes, schema=schema
    )
    queries = _queries(config, objects)

    sizes = config.sweep or [config.search.pool_size]
    sizes = [max(size, config.search.k_results) for size in sizes]
    reports = list(
        run_benchmark(
            config.method,
            objects,
            queries,
            truth,
            pool_sweep(config.search, sizes),
            graph=graph,
            multiplier=config.multiplier,
            filter_during_traversal=config.filter_during_traversal,
        )
    )
    path = write_report(report_path, reports, config)
    for report in reports:
        row = report.row()
        print("\t".join(str(row[c]) for c in row), file=out)
    return path


def cmd_gen_attrs(config: RunConfig, out: TextIO = sys.stdout) -> Path:
    """Generate a uniform synthetic attribute table."""
    target = _require(config.out, "--out")
    if not config.cardinalities:
        raise UsageError("--cardinalities is required")
    n = config.n
    if n is None:
        if not config.vectors:
            raise UsageError("give --n or --vectors to size the attribute table")
        n = read_fvecs(config.vectors).shape[0]
    codes = generate_attributes(n, len(config.cardinalities), config.cardinalities, config.seed)
    path = write_attributes(target, codes, synthetic_schema(config.cardinalities))
    print(f"attributes\t{path}\tn={n}\tm={len(config.cardinalities)}", file=out)
    return path


COMMANDS = {
    "build": cmd_build,
    "gt": cmd_gt,
    "search": cmd_search,
    "bench": cmd_bench,
    "gen-attrs": cmd_gen_attrs,
}
