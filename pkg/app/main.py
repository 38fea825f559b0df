"""Command-line entry point for nhq-search."""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import NHQError, UsageError
from app.core.logging import get_logger, setup_logging
from app.core.models import BuildParams, RunConfig, SearchParams
from app.services.commands import COMMANDS

logger = get_logger(__name__)

BUILD_KEYS = {
    "k": "k",
    "l": "l",
    "theta_prime": "theta_prime",
    "quality_threshold": "quality_threshold",
    "threads": "threads",
}
SEARCH_KEYS = {
    "k_results": "k_results",
    "pool_size": "pool_size",
    "h": "h",
    "seeds": "seeds",
}


def _common_arguments() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    add = parent.add_argument
    add("--config", type=Path, help="KEY=VALUE file; flags override its values")
    add("--vectors", help="base vectors (.fvecs)")
    add("--attributes", help="base attribute table (.csv)")
    add("--queries", help="query vectors (.fvecs)")
    add("--query-attributes", help="query attribute table (.csv)")
    add("--index", help="index archive to read")
    add("--gt", help="ground-truth file (.ivecs)")
    add("--out", help="output file")
    add("--report", help="benchmark report (.tsv)")
    add("--graph", choices=["npg-kgraph", "npg-nsw", "threshold"])
    add("--mode", choices=["euclidean", "fusion"])
    add("--weights", choices=["recommended", "fixed", "normalized", "harmonic"])
    add("--omega-v", type=float)
    add("--omega-l", type=float)
    add("--k", type=int, help="degree bound")
    add("--l", type=int, help="candidate pool size")
    add("--theta-prime", type=float, help="threshold graph distance threshold")
    add("--quality-threshold", type=float)
    add("--threads", type=int)
    add("--pool-size", type=int)
    add("--h", type=int, help="stage-1 sampling divisor")
    add("--k-results", type=int)
    add("--seeds", type=int, help="random entry vertices per query")
    add("--seed", type=int, help="global seed")
    add("--flavor", choices=["vector", "hybrid"])
    add("--method", help="oracle | greedy | two-stage | nhq-npg-kgraph | nhq-npg-nsw | strategy-b")
    add("--sweep", help="comma-separated pool sizes")
    add("--multiplier", type=int, help="strategy-b candidate multiplier")
    add(
        "--filter-during-traversal",
        action="store_true",
        default=None,
        help="strategy-b: check attributes before results are admitted",
    )
    add("--verify", action="store_true", default=None, help="check landing-zone invariant")
    add("--n", type=int, help="rows to generate")
    add("--cardinalities", help="comma-separated attribute cardinalities")
    add("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    add("--debug", action="store_true", help="Enable debug mode")
    return parent


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="nhq",
        description="Hybrid vector + attribute nearest-neighbor search over navigable proximity graphs",
    )
    parser.add_argument(
        "--version", action="version", version=f"nhq-search {settings.app_version}"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    parent = _common_arguments()
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[parent], help=(fn.__doc__ or "").splitlines()[0])
    return parser


def _int_list(value: Any) -> list[int]:
    if value is None or value == "":
        return []
    if isinstance(value, list):
        return [int(v) for v in value]
    try:
        return [int(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {value!r}") from None


def _flag(values: dict[str, Any], key: str) -> bool:
    value = values.get(key, False)
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return bool(value)


def merge_values(args: argparse.Namespace) -> dict[str, Any]:
    """Config-file values overridden by explicitly given flags."""
    values: dict[str, Any] = {}
    if args.config is not None:
        if not args.config.exists():
            raise UsageError(f"config file not found: {args.config}")
        raw = dotenv_values(args.config)
        values.update(
            {key.lower().replace("-", "_"): v for key, v in raw.items() if v is not None}
        )
    values.update({key: v for key, v in vars(args).items() if v is not None})
    return values


def build_run_config(values: dict[str, Any]) -> RunConfig:
    """Turn merged flat values into a RunConfig; defaults come from settings."""
    seed = int(values.get("seed", settings.default_seed))
    build = {
        "k": settings.degree_bound,
        "l": settings.candidate_pool_size,
        "quality_threshold": settings.quality_threshold,
        "max_iterations": settings.kgraph_max_iterations,
        "quality_sample": settings.quality_sample_size,
        "threads": settings.build_threads,
        "seed": seed,
    }
    build.update({dst: values[src] for src, dst in BUILD_KEYS.items() if src in values})
    if "l" not in values and int(build["l"]) < int(build["k"]):
        build["l"] = int(build["k"]) * 3
    search = {
        "k_results": settings.k_results,
        "pool_size": settings.pool_size,
        "h": settings.stage_divisor,
        "seeds": settings.search_seeds,
        "rng_seed": seed,
    }
    search.update({dst: values[src] for src, dst in SEARCH_KEYS.items() if src in values})
    if "pool_size" not in values:
        search["pool_size"] = max(int(search["pool_size"]), int(search["k_results"]))

    passthrough = {
        key: values[key]
        for key in (
            "vectors",
            "attributes",
            "queries",
            "query_attributes",
            "index",
            "gt",
            "out",
            "report",
            "graph",
            "mode",
            "weights",
            "omega_v",
            "omega_l",
            "method",
            "flavor",
            "n",
        )
        if key in values
    }
    return RunConfig(
        subcommand=values["subcommand"],
        build=BuildParams(**build),
        search=SearchParams(**search),
        sweep=_int_list(values.get("sweep")),
        cardinalities=_int_list(values.get("cardinalities")),
        multiplier=int(values.get("multiplier", settings.strategy_b_multiplier)),
        verify=_flag(values, "verify"),
        filter_during_traversal=_flag(values, "filter_during_traversal"),
        seed=seed,
        **passthrough,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    args = create_parser().parse_args(argv)

    level = args.log_level or ("DEBUG" if args.debug or settings.debug else settings.log_level)
    setup_logging(level=level)

    try:
        config = build_run_config(merge_values(args))
        logger.debug(f"run config: {config.model_dump_json()}")
        COMMANDS[config.subcommand](config, sys.stdout)
    except NHQError as e:
        logger.error(str(e))
        return e.exit_code
    except ValidationError as e:
        logger.error(f"invalid parameters: {e}")
        return 2
    except Exception as e:
        logger.exception(f"unexpected error: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
