"""Binary index archive.

Layout (all integers little-endian)::

    magic        8 bytes   b"NHQINDEX"
    version      u8
    header_len   u32
    header       header_len bytes of UTF-8 JSON (sorted keys)
    n            u32
    degree_bound u32       0 when unbounded
    degrees      n x u32
    neighbors    sum(degrees) x u32, vertex by vertex
    checksum     32 bytes  SHA-256 of everything above

The JSON header holds the build metadata, distance mode and attribute schema.
"""

import hashlib
import json
import struct
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from app.core.errors import (
    ArchiveError,
    BadMagicError,
    ChecksumMismatchError,
    InvariantViolation,
    UsageError,
    VersionMismatchError,
)
from app.core.graph import CompositeGraph
from app.core.logging import get_logger
from app.core.models import AttributeSchema, BuildMeta, DistanceMode

logger = get_logger(__name__)

MAGIC = b"NHQINDEX"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sBI")
_COUNTS = struct.Struct("<II")
_DIGEST = 32


class IndexArchive(BaseModel):
    """A graph plus everything needed to query it with raw attribute strings."""

    version: int = FORMAT_VERSION
    graph: CompositeGraph
    attr_schema: AttributeSchema | None = None
    checksum: str = Field(default="", description="hex SHA-256 of the payload")


def _header(graph: CompositeGraph, schema: AttributeSchema | None) -> bytes:
    header: dict[str, Any] = {
        "build_meta": graph.build_meta.model_dump(mode="json"),
        "distance_mode": graph.distance_mode.model_dump(mode="json"),
        "schema": schema.model_dump(mode="json") if schema is not None else None,
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def encode_index(graph: CompositeGraph, schema: AttributeSchema | None = None) -> bytes:
    """Serialize ``graph`` (and its attribute dictionaries) to archive bytes."""
    header = _header(graph, schema)
    degrees = graph.degrees().astype("<u4")
    flat = [v for nbrs in graph.adjacency for v in nbrs]
    neighbors = np.asarray(flat, dtype="<u4")
    body = b"".join(
        [
            _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)),
            header,
            _COUNTS.pack(graph.n, graph.degree_bound or 0),
            degrees.tobytes(),
            neighbors.tobytes(),
        ]
    )
    return body + hashlib.sha256(body).digest()


def decode_index(raw: bytes) -> IndexArchive:
    """Parse archive bytes, validating magic, version and checksum in that order.

    Nothing is constructed until every check has passed.
    """
    if len(raw) < len(MAGIC) or raw[: len(MAGIC)] != MAGIC:
        raise BadMagicError("not an index archive (bad magic)", 0)
    if len(raw) < _PREFIX.size + _COUNTS.size + _DIGEST:
        raise ArchiveError("archive truncated", len(raw))
    _, version, header_len = _PREFIX.unpack_from(raw, 0)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"archive format version {version}, expected {FORMAT_VERSION}", len(MAGIC)
        )

    body, digest = raw[:-_DIGEST], raw[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumMismatchError("archive checksum mismatch", len(body))

    offset = _PREFIX.size
    if offset + header_len + _COUNTS.size > len(body):
        raise ArchiveError("header runs past end of archive", offset)
    try:
        header = json.loads(body[offset : offset + header_len].decode("utf-8"))
        build_meta = BuildMeta.model_validate(header["build_meta"])
        mode = DistanceMode.model_validate(header["distance_mode"])
        schema = (
            AttributeSchema.model_validate(header["schema"])
            if header.get("schema") is not None
            else None
        )
    except (ValueError, KeyError, ValidationError) as e:
        raise ArchiveError(f"invalid archive header: {e}", offset) from None
    offset += header_len

    n, bound = _COUNTS.unpack_from(body, offset)
    offset += _COUNTS.size
    if offset + 4 * n > len(body):
        raise ArchiveError("degree table runs past end of archive", offset)
    degrees = np.frombuffer(body, dtype="<u4", count=n, offset=offset).astype(np.int64)
    offset += 4 * n
    total = int(degrees.sum())
    if offset + 4 * total != len(body):
        raise ArchiveError("neighbor payload size does not match degrees", offset)
    flat = np.frombuffer(body, dtype="<u4", count=total, offset=offset).astype(np.int64)
    bounds = np.concatenate([[0], np.cumsum(degrees)])
    adjacency = [flat[bounds[u] : bounds[u + 1]].tolist() for u in range(n)]

    graph = CompositeGraph(
        n=n,
        adjacency=adjacency,
        degree_bound=bound or None,
        distance_mode=mode,
        build_meta=build_meta,
    )
    try:
        graph.check_invariants()
    except InvariantViolation as e:
        raise ArchiveError(f"archive graph is invalid: {e}") from None
    return IndexArchive(graph=graph, attr_schema=schema, checksum=digest.hex())


def save_index(
    path: Path | str, graph: CompositeGraph, schema: AttributeSchema | None = None
) -> IndexArchive:
    """Write ``graph`` to ``path``; returns the archive with its checksum.

    The bytes go to a sibling ``.tmp`` file that replaces ``path`` only once
    fully written, so an existing archive survives a failed save.
    """
    path = Path(path)
    raw = encode_index(graph, schema)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + ".tmp")
    try:
        tmp_path.write_bytes(raw)
        tmp_path.replace(path)
    except BaseException:
        tmp_path.unlink(missing_ok=True)
        raise
    checksum = raw[-_DIGEST:].hex()
    logger.info(f"index saved to {path} ({len(raw)} bytes, sha256 {checksum[:12]})")
    return IndexArchive(graph=graph, attr_schema=schema, checksum=checksum)


def load_index(path: Path | str) -> IndexArchive:
    """Read and validate an archive written by ``save_index``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise UsageError(f"index not found: {path}") from None
    archive = decode_index(raw)
    logger.debug(f"index loaded from {path}: n={archive.graph.n}")
    return archive
