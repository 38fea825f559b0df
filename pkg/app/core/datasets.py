"""Dataset ingestion and generation.

Vector files use the texmex ``.fvecs`` / ``.ivecs`` layout: each record is a
little-endian int32 dimension ``d`` followed by ``d`` little-endian float32
(or int32) values. Attribute tables are UTF-8 CSV with a header row.
"""

import csv
import json
from pathlib import Path
from typing import Any, Literal

import numpy as np

from app.core.errors import ConfigurationError, DataFormatError, UsageError
from app.core.logging import get_logger
from app.core.models import (
    AttributeSchema,
    AttributeSpec,
    GroundTruth,
    GroundTruthEntry,
    ObjectSet,
)

logger = get_logger(__name__)


def _locate_error(raw: bytes, d: int) -> DataFormatError:
    """Walk record headers to find the first malformed record."""
    offset = 0
    while offset < len(raw):
        if offset + 4 > len(raw):
            return DataFormatError("truncated record header", offset)
        dim = int(np.frombuffer(raw, dtype="<i4", count=1, offset=offset)[0])
        if dim <= 0:
            return DataFormatError(f"invalid dimension {dim}", offset)
        if dim != d:
            return DataFormatError(f"inconsistent dimension {dim} (expected {d})", offset)
        if offset + 4 + 4 * dim > len(raw):
            return DataFormatError("truncated record", offset)
        offset += 4 + 4 * dim
    return DataFormatError("malformed vector file", offset)


def _read_vecs(path: Path | str, dtype: str) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None
    if not raw:
        return np.zeros((0, 0), dtype=dtype)
    if len(raw) < 4:
        raise DataFormatError("truncated record header", 0)

    d = int(np.frombuffer(raw, dtype="<i4", count=1)[0])
    if d <= 0:
        raise DataFormatError(f"invalid dimension {d}", 0)
    record = 4 * (d + 1)
    if len(raw) % record:
        raise _locate_error(raw, d)
    headers = np.frombuffer(raw, dtype="<i4").reshape(-1, d + 1)[:, 0]
    if np.any(headers != d):
        raise _locate_error(raw, d)

    values = np.frombuffer(raw, dtype=dtype).reshape(-1, d + 1)[:, 1:]
    return np.ascontiguousarray(values).astype(dtype.lstrip("<"))


def _write_vecs(path: Path | str, values: np.ndarray, dtype: str) -> Path:
    path = Path(path)
    values = np.asarray(values)
    if values.ndim != 2:
        raise UsageError(f"expected a 2-D array, got shape {values.shape}")
    n, d = values.shape
    buf = np.empty((n, d + 1), dtype="<i4")
    buf[:, 0] = d
    buf[:, 1:] = np.ascontiguousarray(values, dtype=dtype).view("<i4")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buf.tobytes() if n else b"")
    return path


def read_fvecs(path: Path | str) -> np.ndarray:
    """Read an ``.fvecs`` file as an (n, d) float32 array (empty file: shape (0, 0))."""
    return _read_vecs(path, "<f4")


def read_ivecs(path: Path | str) -> np.ndarray:
    """Read an ``.ivecs`` file as an (n, d) int32 array."""
    return _read_vecs(path, "<i4")


def write_fvecs(path: Path | str, vectors: Any) -> Path:
    """Write vectors as little-endian float32 ``.fvecs`` records."""
    return _write_vecs(path, vectors, "<f4")


def write_ivecs(path: Path | str, values: Any) -> Path:
    """Write integer rows as little-endian int32 ``.ivecs`` records."""
    return _write_vecs(path, values, "<i4")


def read_attributes(
    path: Path | str, schema: AttributeSchema | None = None
) -> tuple[np.ndarray, AttributeSchema]:
    """Read an attribute CSV and encode it with ordinal codes.

    Args:
        path: CSV file with a header row naming the attributes
        schema: Existing dictionaries; values it does not know are an error.
            Without one, codes are assigned in first-seen order.

    Returns:
        (n, m) int64 codes and the schema used
    """
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}") from None

    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if not header or not all(name.strip() for name in header):
            raise DataFormatError(f"{path}: missing or empty header row")
        header = [name.strip() for name in header]

        if schema is None:
            working = AttributeSchema(attributes=[AttributeSpec(name=n) for n in header])
            extend = True
        else:
            if schema.names != header:
                raise DataFormatError(
                    f"{path}: header {header} does not match schema {schema.names}"
                )
            working = schema.model_copy(deep=True)
            extend = False

        rows: list[list[int]] = []
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: line {line} has {len(row)} fields, expected {len(header)}"
                )
            try:
                rows.append(working.encode([value.strip() for value in row], extend=extend))
            except UsageError as e:
                raise DataFormatError(f"{path}: line {line}: {e}") from None

    codes = np.asarray(rows, dtype=np.int64).reshape(len(rows), len(header))
    logger.debug(f"read {len(rows)} attribute rows from {path}")
    return codes, working


def write_attributes(path: Path | str, codes: Any, schema: AttributeSchema) -> Path:
    """Write codes back to CSV using the schema's value strings."""
    path = Path(path)
    codes = np.asarray(codes, dtype=np.int64)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(schema.names)
        for row in codes:
            writer.writerow(schema.decode(row.tolist()))
    return path


def generate_attributes(
    n: int, m: int, cardinalities: list[int] | tuple[int, ...], seed: int = 42
) -> np.ndarray:
    """Uniform independent attribute codes.

    Uses ``numpy.random.default_rng(seed)`` (PCG64) and draws one column per
    attribute, in attribute order, with ``Generator.integers(0, cardinality,
    size=n)``. Query attributes come from the same call with another seed.

    Returns:
        (n, m) int64 codes
    """
    if m < 1:
        raise UsageError(f"m must be >= 1, got {m}")
    if len(cardinalities) != m:
        raise UsageError(f"{len(cardinalities)} cardinalities given for m={m}")
    if any(c < 1 for c in cardinalities):
        raise UsageError(f"cardinalities must be >= 1, got {list(cardinalities)}")
    rng = np.random.default_rng(seed)
    columns = [rng.integers(0, c, size=n, dtype=np.int64) for c in cardinalities]
    return np.stack(columns, axis=1) if n else np.zeros((0, m), dtype=np.int64)


def generate_vectors(
    n: int,
    d: int,
    seed: int = 42,
    distribution: Literal["gaussian", "uniform", "clustered"] = "gaussian",
    clusters: int = 10,
    spread: float = 0.1,
) -> np.ndarray:
    """Seeded synthetic feature vectors as an (n, d) float32 array.

    ``clustered`` draws cluster centers uniformly from the unit cube and adds
    gaussian noise with standard deviation ``spread``.
    """
    if n < 0 or d < 1:
        raise UsageError(f"invalid shape n={n}, d={d}")
    rng = np.random.default_rng(seed)
    if distribution == "gaussian":
        vectors = rng.standard_normal((n, d))
    elif distribution == "uniform":
        vectors = rng.random((n, d))
    elif distribution == "clustered":
        centers = rng.random((clusters, d))
        labels = rng.integers(0, clusters, size=n)
        vectors = centers[labels] + spread * rng.standard_normal((n, d))
    else:
        raise UsageError(f"unknown distribution {distribution!r}")
    return vectors.astype(np.float32)


def synthetic_schema(
    cardinalities: list[int] | tuple[int, ...], names: list[str] | None = None
) -> AttributeSchema:
    """Schema with value strings ``<name>_<code>`` for generated attributes."""
    names = names or [f"attr{i}" for i in range(len(cardinalities))]
    if len(names) != len(cardinalities):
        raise UsageError("one name per attribute is required")
    return AttributeSchema(
        attributes=[
            AttributeSpec(name=name, values=[f"{name}_{v}" for v in range(c)])
            for name, c in zip(names, cardinalities)
        ]
    )


def load_object_set(
    vectors_path: Path | str,
    attributes_path: Path | str | None = None,
    schema: AttributeSchema | None = None,
) -> ObjectSet:
    """Read vectors (and attributes) from disk into a validated ObjectSet."""
    vectors = read_fvecs(vectors_path)
    if vectors.shape[0] == 0:
        raise DataFormatError(f"{vectors_path}: no vectors")
    if attributes_path is None:
        return ObjectSet.from_arrays(vectors)

    codes, schema = read_attributes(attributes_path, schema)
    if codes.shape[0] != vectors.shape[0]:
        raise ConfigurationError(
            f"{vectors.shape[0]} vectors but {codes.shape[0]} attribute rows"
        )
    return ObjectSet.from_arrays(vectors, codes, schema=schema)


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_ground_truth(path: Path | str, truth: GroundTruth) -> Path:
    """Persist ground truth as ivecs rows of width ``k`` padded with ``-1``.

    A JSON sidecar (``<path>.json``) records the flavor and ``k``.
    """
    path = Path(path)
    rows = np.full((len(truth.entries), truth.k), -1, dtype=np.int32)
    for i, entry in enumerate(truth.entries):
        rows[i, : len(entry.indices)] = entry.indices[: truth.k]
    write_ivecs(path, rows)
    _sidecar(path).write_text(
        json.dumps({"flavor": truth.flavor, "k": truth.k}, indent=2) + "\n",
        encoding="utf-8",
    )
    logger.info(f"ground truth ({truth.flavor}, k={truth.k}) written to {path}")
    return path


def read_ground_truth(path: Path | str) -> GroundTruth:
    """Load ground truth written by ``write_ground_truth`` (distances are not stored)."""
    path = Path(path)
    rows = read_ivecs(path)
    sidecar = _sidecar(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
        flavor, k = meta["flavor"], int(meta["k"])
    else:
        logger.warning(f"{sidecar} missing; assuming hybrid flavor")
        flavor, k = "hybrid", int(rows.shape[1]) if rows.size else 1
    entries = [
        GroundTruthEntry(indices=[int(v) for v in row if v >= 0]) for row in rows
    ]
    return GroundTruth(flavor=flavor, k=k, entries=entries)
