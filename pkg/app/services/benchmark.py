"""Benchmark harness: run search methods over a query set and report metrics."""

import csv
import json
import math
import platform
import time
from collections.abc import Callable, Iterator, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from app.core.errors import ConfigurationError, InvariantViolation, NHQError
from app.core.graph import CompositeGraph
from app.core.logging import get_logger
from app.core.metrics import qps, recall_at_k, selectivity, speedup
from app.core.models import (
    EvalReport,
    GroundTruth,
    Hit,
    ObjectSet,
    Query,
    QueryRecord,
    RunConfig,
    SearchParams,
    SearchResult,
)
from app.core.oracle import exact_topk_hybrid, exact_topk_vector, strategy_b_search
from app.core.search import JointPruningSearch

logger = get_logger(__name__)

REPORT_COLUMNS = [
    "method",
    "n",
    "d",
    "m",
    "k",
    "l",
    "pool_size",
    "h",
    "recall_at_k",
    "mean_ndc",
    "speedup",
    "qps",
    "selectivity",
    "seed",
]

# method name -> (ground-truth flavor it is judged against, graph mode it needs)
METHODS: dict[str, tuple[str | None, str | None]] = {
    "oracle": (None, None),
    "greedy": ("vector", "euclidean"),
    "two-stage": ("vector", "euclidean"),
    "nhq-npg-kgraph": ("hybrid", "fusion"),
    "nhq-npg-nsw": ("hybrid", "fusion"),
    "strategy-b": ("hybrid", "euclidean"),
}

MethodFn = Callable[[Query, SearchParams], SearchResult]


def _oracle(objects: ObjectSet, flavor: str) -> MethodFn:
    scan = exact_topk_vector if flavor == "vector" else exact_topk_hybrid

    def run(q: Query, p: SearchParams) -> SearchResult:
        entry = scan(objects, q, p.k_results)
        hits = [Hit(index=i, distance=d) for i, d in zip(entry.indices, entry.distances)]
        return SearchResult(hits=hits, ndc=objects.n)

    return run


def make_method(
    name: str,
    objects: ObjectSet,
    graph: CompositeGraph | None,
    flavor: str,
    multiplier: int = 10,
    filter_during_traversal: bool = False,
) -> MethodFn:
    """Resolve a method name to a query callable, checking its prerequisites.

    Raises:
        ConfigurationError: unknown method, missing or mismatched index, or
            ground truth of the wrong flavor
    """
    if name not in METHODS:
        raise ConfigurationError(f"unknown method {name!r}; choose one of {sorted(METHODS)}")
    wanted_flavor, wanted_mode = METHODS[name]
    if wanted_flavor is not None and wanted_flavor != flavor:
        raise ConfigurationError(
            f"method {name} is judged against {wanted_flavor} ground truth, got {flavor}"
        )
    if filter_during_traversal and name != "strategy-b":
        raise ConfigurationError(f"filter during traversal applies to strategy-b, not {name}")
    if name == "oracle":
        return _oracle(objects, flavor)

    if graph is None:
        raise ConfigurationError(f"method {name} needs an index")
    if graph.n != objects.n:
        raise ConfigurationError(f"index has {graph.n} vertices, object set has {objects.n}")
    if graph.distance_mode.kind.value != wanted_mode:
        raise ConfigurationError(
            f"method {name} needs an index built in {wanted_mode} mode, "
            f"got {graph.distance_mode.kind.value}"
        )
    builder = graph.build_meta.builder
    if name.startswith("nhq-") and name.removeprefix("nhq-") != builder:
        logger.warning(f"method {name} run on an index built by {builder}")

    if name == "strategy-b":
        return lambda q, p: strategy_b_search(
            graph, objects, q, p, multiplier, filter_during_traversal
        )
    if name == "greedy":
        return lambda q, p: JointPruningSearch(graph, objects, p).greedy(q)
    return lambda q, p: JointPruningSearch(graph, objects, p).two_stage(q)


def report_label(method: str, filter_during_traversal: bool = False) -> str:
    """Method name as written to reports; the traversal-filter variant gets its own."""
    return f"{method}-traversal" if filter_during_traversal else method


def pool_sweep(base: SearchParams, pool_sizes: Sequence[int]) -> list[SearchParams]:
    """One SearchParams per pool size, other fields taken from ``base``."""
    return [SearchParams(**{**base.model_dump(), "pool_size": size}) for size in pool_sizes]


def aggregate(report: EvalReport) -> dict[str, float | int]:
    """Aggregates recomputed from the per-query records."""
    recalls = [r.recall for r in report.records if r.recall is not None]
    mean_ndc = math.fsum(r.ndc for r in report.records) / len(report.records)
    return {
        "recall_at_k": math.fsum(recalls) / len(recalls) if recalls else 0.0,
        "mean_ndc": mean_ndc,
        "speedup": speedup(report.n, mean_ndc),
        "qps": qps(len(report.records), report.total_time),
        "excluded_queries": len(report.records) - len(recalls),
    }


def verify_report(report: EvalReport) -> None:
    """Raise InvariantViolation if the aggregates do not follow from the records."""
    if not report.records:
        raise InvariantViolation(f"report for {report.method} has no query records")
    for key, value in aggregate(report).items():
        if getattr(report, key) != value:
            raise InvariantViolation(
                f"report for {report.method}: {key}={getattr(report, key)} "
                f"but records give {value}"
            )


def run_benchmark(
    method: str,
    objects: ObjectSet,
    queries: Sequence[Query],
    truth: GroundTruth,
    sweep: Sequence[SearchParams],
    graph: CompositeGraph | None = None,
    multiplier: int = 10,
    filter_during_traversal: bool = False,
) -> Iterator[EvalReport]:
    """Run every query at every sweep point, yielding one report per point.

    Queries run one at a time on the calling thread; only the search call
    itself is timed. All inputs are checked before any timing starts.
    """
    if len(truth.entries) != len(queries):
        raise ConfigurationError(
            f"{len(queries)} queries but {len(truth.entries)} ground-truth entries"
        )
    if not queries:
        raise ConfigurationError("empty query set")
    for q in queries:
        try:
            objects.check_query(q)
        except NHQError as e:
            raise ConfigurationError(str(e)) from None
    run = make_method(method, objects, graph, truth.flavor, multiplier, filter_during_traversal)
    label = report_label(method, filter_during_traversal)

    query_selectivity = float(np.mean([selectivity(objects, q) for q in queries]))
    build_l = graph.build_meta.params.get("l") if graph is not None else None
    environment = f"python {platform.python_version()} on {platform.machine()}"

    for params in sweep:
        k = params.k_results
        if k > truth.k:
            raise ConfigurationError(f"k_results={k} exceeds ground-truth k={truth.k}")
        records = []
        for q, entry in zip(queries, truth.entries):
            start = time.perf_counter()
            result = run(q, params)
            latency = time.perf_counter() - start
            records.append(
                QueryRecord(recall=recall_at_k(result, entry, k), ndc=result.ndc, latency=latency)
            )

        report = EvalReport(
            method=label,
            n=objects.n,
            d=objects.dim_v,
            m=objects.dim_a,
            k=k,
            l=build_l,
            pool_size=params.pool_size,
            h=params.h,
            seed=params.rng_seed,
            records=records,
            selectivity=query_selectivity,
            environment=environment,
        )
        report = report.model_copy(update=aggregate(report))
        logger.info(
            f"{label} pool={params.pool_size} h={params.h}: "
            f"recall@{k}={report.recall_at_k:.4f} ndc={report.mean_ndc:.1f}"
        )
        yield report


def write_report(
    path: Path | str, reports: Sequence[EvalReport], config: RunConfig | None = None
) -> Path:
    """Write reports as TSV plus a JSON sidecar (``<path>.json``).

    Each report is verified against its records first.
    """
    path = Path(path)
    for report in reports:
        verify_report(report)

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as tsvfile:
        writer = csv.DictWriter(
            tsvfile, fieldnames=REPORT_COLUMNS, delimiter="\t", lineterminator="\n"
        )
        writer.writeheader()
        for report in reports:
            writer.writerow(report.row())

    sidecar: dict[str, Any] = {
        "run_config": config.model_dump(mode="json") if config is not None else None,
        "recall_convention": reports[0].recall_convention if reports else "",
        "environment": reports[0].environment if reports else "",
        "rows": [
            {
                "method": r.method,
                "pool_size": r.pool_size,
                "h": r.h,
                "queries": len(r.records),
                "excluded_queries": r.excluded_queries,
            }
            for r in reports
        ],
    }
    path.with_name(path.name + ".json").write_text(
        json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
    )
    logger.info(f"report with {len(reports)} rows written to {path}")
    return path
