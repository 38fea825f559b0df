#!/usr/bin/env python3
"""Seeded synthetic workload generator.

Writes base and query vectors (.fvecs) and matching attribute tables (.csv)
into one directory, ready for ``nhq build`` / ``nhq gt`` / ``nhq bench``.
"""

import argparse
from pathlib import Path

from app.core.datasets import (
    generate_attributes,
    generate_vectors,
    synthetic_schema,
    write_attributes,
    write_fvecs,
)
from app.core.logging import get_logger, setup_logging

logger = get_logger(__name__)


def generate(
    out_dir: Path,
    n: int,
    queries: int,
    d: int,
    cardinalities: list[int],
    seed: int,
    distribution: str = "gaussian",
) -> dict[str, Path]:
    """Write a base/query workload and return the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    schema = synthetic_schema(cardinalities)
    m = len(cardinalities)

    # base and queries come from one draw so they share the distribution
    vectors = generate_vectors(n + queries, d, seed=seed, distribution=distribution)
    paths = {
        "vectors": write_fvecs(out_dir / "base.fvecs", vectors[:n]),
        "queries": write_fvecs(out_dir / "query.fvecs", vectors[n:]),
    }
    if m:
        paths["attributes"] = write_attributes(
            out_dir / "base_attrs.csv", generate_attributes(n, m, cardinalities, seed), schema
        )
        paths["query_attributes"] = write_attributes(
            out_dir / "query_attrs.csv",
            generate_attributes(queries, m, cardinalities, seed + 1),
            schema,
        )
    for name, path in paths.items():
        logger.info(f"{name}: {path}")
    return paths


def main() -> None:
    """Main function."""
    parser = argparse.ArgumentParser(description="Generate a seeded hybrid-query workload")
    parser.add_argument("--out-dir", type=Path, required=True, help="Output directory")
    parser.add_argument("--n", type=int, default=2000, help="Base objects")
    parser.add_argument("--queries", type=int, default=100, help="Query objects")
    parser.add_argument("--d", type=int, default=16, help="Vector dimension")
    parser.add_argument(
        "--cardinalities", default="3,3,3", help="Comma-separated attribute cardinalities"
    )
    parser.add_argument(
        "--distribution", choices=["gaussian", "uniform", "clustered"], default="gaussian"
    )
    parser.add_argument("--seed", type=int, default=42, help="Global seed")
    args = parser.parse_args()

    setup_logging()
    cardinalities = [int(c) for c in args.cardinalities.split(",") if c.strip()]
    generate(args.out_dir, args.n, args.queries, args.d, cardinalities, args.seed, args.distribution)


if __name__ == "__main__":
    main()
