"""Data models for hybrid vector + attribute search."""

import math
from enum import Enum
from typing import Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from app.core.errors import UsageError


def _frozen_array(values: Any, dtype: Any, ndim: int) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    if array.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class DistanceKind(str, Enum):
    """Geometry a graph is built and searched in."""

    EUCLIDEAN = "euclidean"
    FUSION = "fusion"


class WeightScheme(str, Enum):
    """How the vector and attribute distances are fused."""

    FIXED = "fixed"
    RECOMMENDED = "recommended"
    NORMALIZED = "normalized"
    HARMONIC = "harmonic"


class FusionWeights(BaseModel):
    """Weights of the vector distance and the attribute distance.

    ``recommended`` is parameter-free: for every pair it uses a vector weight
    of 1 and an attribute weight of ``delta / m``, which keeps the fused value
    between ``delta`` and ``2 * delta``.
    """

    scheme: WeightScheme = WeightScheme.RECOMMENDED
    omega_v: float = Field(default=1.0, ge=0.0)
    omega_l: float = Field(default=0.0, ge=0.0)
    delta_max: float | None = Field(default=None, gt=0.0)
    chi_max: float | None = Field(default=None, gt=0.0)
    harmonic_c: float | None = Field(default=None, gt=1.0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_scheme(self) -> "FusionWeights":
        """Validate parameters required by each scheme."""
        if self.scheme is WeightScheme.FIXED and self.omega_v == 0 and self.omega_l == 0:
            raise ValueError("fixed weights must not both be zero")
        if self.scheme is WeightScheme.NORMALIZED and self.delta_max is None:
            raise ValueError("normalized weights need delta_max")
        return self

    @classmethod
    def recommended(cls) -> "FusionWeights":
        return cls(scheme=WeightScheme.RECOMMENDED)

    @classmethod
    def fixed(cls, omega_v: float, omega_l: float) -> "FusionWeights":
        return cls(scheme=WeightScheme.FIXED, omega_v=omega_v, omega_l=omega_l)

    @classmethod
    def normalized(
        cls, delta_max: float, chi_max: float | None = None
    ) -> "FusionWeights":
        return cls(scheme=WeightScheme.NORMALIZED, delta_max=delta_max, chi_max=chi_max)

    @classmethod
    def harmonic(cls, c: float | None = None) -> "FusionWeights":
        return cls(scheme=WeightScheme.HARMONIC, harmonic_c=c)


class DistanceMode(BaseModel):
    """Distance a graph was built under: plain Euclidean or fused."""

    kind: DistanceKind = DistanceKind.EUCLIDEAN
    weights: FusionWeights | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def default_weights(cls, data: Any) -> Any:
        """Fusion mode without explicit weights uses the recommended scheme."""
        if not isinstance(data, dict):
            return data
        kind = DistanceKind(data.get("kind", DistanceKind.EUCLIDEAN))
        if kind is DistanceKind.FUSION and data.get("weights") is None:
            return {**data, "kind": kind, "weights": FusionWeights.recommended()}
        if kind is DistanceKind.EUCLIDEAN:
            return {**data, "kind": kind, "weights": None}
        return data

    @classmethod
    def euclidean(cls) -> "DistanceMode":
        return cls(kind=DistanceKind.EUCLIDEAN)

    @classmethod
    def fusion(cls, weights: FusionWeights | None = None) -> "DistanceMode":
        return cls(kind=DistanceKind.FUSION, weights=weights)

    @property
    def is_fusion(self) -> bool:
        return self.kind is DistanceKind.FUSION


class AttributeSpec(BaseModel):
    """One attribute column and its ordinal dictionary."""

    name: str = Field(..., min_length=1)
    values: list[str] = Field(default_factory=list)

    @property
    def cardinality(self) -> int:
        return len(self.values)


class AttributeSchema(BaseModel):
    """Per-attribute ordinal dictionaries (string value <-> dense code)."""

    attributes: list[AttributeSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_unique(self) -> "AttributeSchema":
        for spec in self.attributes:
            if len(set(spec.values)) != len(spec.values):
                raise ValueError(f"duplicate values in attribute {spec.name!r}")
        return self

    @property
    def names(self) -> list[str]:
        return [spec.name for spec in self.attributes]

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(spec.cardinality for spec in self.attributes)

    def encode(self, row: list[str], extend: bool = False) -> list[int]:
        """Map raw attribute strings to codes.

        Args:
            row: One value per attribute
            extend: Append unseen values to the dictionary instead of failing

        Returns:
            Ordinal codes
        """
        if len(row) != len(self.attributes):
            raise UsageError(
                f"expected {len(self.attributes)} attribute values, got {len(row)}"
            )
        codes = []
        for spec, value in zip(self.attributes, row):
            try:
                codes.append(spec.values.index(value))
            except ValueError:
                if not extend:
                    raise UsageError(
                        f"unknown value {value!r} for attribute {spec.name!r}"
                    ) from None
                spec.values.append(value)
                codes.append(len(spec.values) - 1)
        return codes

    def decode(self, codes: list[int]) -> list[str]:
        """Map codes back to attribute strings."""
        return [spec.values[c] for spec, c in zip(self.attributes, codes)]


class Query(BaseModel):
    """A hybrid query: a feature vector plus required attribute codes."""

    vector: np.ndarray
    attributes: np.ndarray = Field(default_factory=lambda: np.zeros(0, np.int64))
    k_results: int = Field(default=10, ge=1)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("vector", mode="before")
    @classmethod
    def coerce_vector(cls, v: Any) -> np.ndarray:
        array = _frozen_array(v, np.float64, 1)
        if array.size == 0:
            raise ValueError("query vector must have at least one dimension")
        if not np.all(np.isfinite(array)):
            raise ValueError("query vector contains NaN or Inf")
        return array

    @field_validator("attributes", mode="before")
    @classmethod
    def coerce_attributes(cls, v: Any) -> np.ndarray:
        array = _frozen_array(v, np.int64, 1)
        if np.any(array < 0):
            raise ValueError("attribute codes must be non-negative")
        return array


class ObjectRecord(BaseModel):
    """Read-only view of one object of an ObjectSet."""

    index: int
    vector: np.ndarray
    attributes: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class ObjectSet(BaseModel):
    """Aligned feature vectors and attribute codes, one row per object.

    Vectors are held in float64 regardless of how they were stored on disk.
    """

    vectors: np.ndarray
    attributes: np.ndarray
    attr_cardinalities: tuple[int, ...] = ()
    attr_schema: AttributeSchema | None = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("vectors", mode="before")
    @classmethod
    def coerce_vectors(cls, v: Any) -> np.ndarray:
        array = _frozen_array(v, np.float64, 2)
        if array.shape[1] < 1:
            raise ValueError("feature vectors need at least one dimension")
        if not np.all(np.isfinite(array)):
            raise ValueError("feature vectors contain NaN or Inf")
        return array

    @field_validator("attributes", mode="before")
    @classmethod
    def coerce_attributes(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, np.int64, 2)

    @model_validator(mode="after")
    def check_alignment(self) -> "ObjectSet":
        n = self.vectors.shape[0]
        if self.attributes.shape[0] != n:
            raise ValueError(
                f"{n} vectors but {self.attributes.shape[0]} attribute rows"
            )
        m = self.attributes.shape[1]
        if len(self.attr_cardinalities) != m:
            raise ValueError(
                f"{m} attribute columns but {len(self.attr_cardinalities)} cardinalities"
            )
        if any(c < 1 for c in self.attr_cardinalities):
            raise ValueError("attribute cardinalities must be positive")
        if m and n:
            if np.any(self.attributes < 0):
                raise ValueError("attribute codes must be non-negative")
            limits = np.asarray(self.attr_cardinalities)
            if np.any(self.attributes >= limits):
                raise ValueError("attribute code exceeds its declared cardinality")
        return self

    @classmethod
    def from_arrays(
        cls,
        vectors: Any,
        attributes: Any | None = None,
        cardinalities: tuple[int, ...] | list[int] | None = None,
        schema: AttributeSchema | None = None,
    ) -> "ObjectSet":
        """Build an object set, inferring what was not supplied.

        Args:
            vectors: (n, d) feature vectors
            attributes: (n, m) ordinal codes; omitted means m = 0
            cardinalities: declared cardinality per attribute; inferred as
                ``max code + 1`` (or taken from the schema) when omitted
            schema: ordinal dictionaries of the attributes

        Returns:
            Validated ObjectSet
        """
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim == 1:
            vectors = vectors.reshape(1, -1)
        n = vectors.shape[0]
        if attributes is None:
            attributes = np.zeros((n, 0), dtype=np.int64)
        attributes = np.asarray(attributes, dtype=np.int64)
        if attributes.ndim == 1:
            attributes = attributes.reshape(-1, 1)
        if cardinalities is None:
            if schema is not None:
                cardinalities = schema.cardinalities
            elif attributes.shape[1] and n:
                cardinalities = tuple(int(c) + 1 for c in attributes.max(axis=0))
            else:
                cardinalities = (1,) * attributes.shape[1]
        try:
            return cls(
                vectors=vectors,
                attributes=attributes,
                attr_cardinalities=tuple(int(c) for c in cardinalities),
                attr_schema=schema,
            )
        except ValueError as e:
            raise UsageError(str(e)) from e

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim_v(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def dim_a(self) -> int:
        return int(self.attributes.shape[1])

    def __len__(self) -> int:
        return self.n

    def record(self, index: int) -> ObjectRecord:
        """Return object ``index`` as a record."""
        return ObjectRecord(
            index=index, vector=self.vectors[index], attributes=self.attributes[index]
        )

    def query(self, index: int, k_results: int = 10) -> Query:
        """Use row ``index`` as a query (for query sets stored as ObjectSets)."""
        return Query(
            vector=self.vectors[index],
            attributes=self.attributes[index],
            k_results=k_results,
        )

    def check_query(self, query: Query) -> None:
        """Raise UsageError if the query does not fit this object set."""
        if query.vector.shape[0] != self.dim_v:
            raise UsageError(
                f"query has {query.vector.shape[0]} vector dimensions, objects have {self.dim_v}"
            )
        if query.attributes.shape[0] != self.dim_a:
            raise UsageError(
                f"query has {query.attributes.shape[0]} attributes, objects have {self.dim_a}"
            )


class BuildParams(BaseModel):
    """Parameters shared by the graph builders."""

    k: int = Field(default=20, ge=1, description="degree bound")
    l: int = Field(default=60, ge=1, description="candidate pool size")  # noqa: E741
    quality_threshold: float = Field(default=0.8, gt=0.0, le=1.0)
    max_iterations: int = Field(default=30, ge=1)
    quality_sample: int = Field(default=500, ge=1)
    theta_prime: float | None = Field(default=None, ge=0.0)
    seed: int = Field(default=42, ge=0)
    threads: int = Field(default=1, ge=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_pool(self) -> "BuildParams":
        if self.l < self.k:
            raise ValueError(f"candidate pool size l={self.l} must be >= k={self.k}")
        return self


class BuildMeta(BaseModel):
    """Provenance of a built graph, stored in the index archive."""

    builder: str
    params: dict[str, Any] = Field(default_factory=dict)
    seed: int = 0


class SearchParams(BaseModel):
    """Query-time parameters."""

    k_results: int = Field(default=10, ge=1)
    pool_size: int = Field(default=100, ge=1)
    h: int = Field(default=2, ge=1, description="stage-1 sampling divisor")
    seeds: int = Field(default=1, ge=1, description="random entry vertices")
    rng_seed: int = Field(default=42, ge=0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_pool(self) -> "SearchParams":
        if self.pool_size < self.k_results:
            raise ValueError(
                f"pool_size={self.pool_size} must be >= k_results={self.k_results}"
            )
        return self


class Hit(BaseModel):
    """One search result."""

    index: int
    distance: float


class SearchResult(BaseModel):
    """Hits of a search plus its routing statistics."""

    hits: list[Hit] = Field(default_factory=list)
    ndc: int = 0
    hops: int = 0
    stage1_hops: int = 0
    stage2_hops: int = 0
    path: list[int] = Field(default_factory=list)
    attribute_checks: int = 0

    @property
    def indices(self) -> list[int]:
        return [hit.index for hit in self.hits]


class GroundTruthEntry(BaseModel):
    """Exact answer for one query."""

    indices: list[int] = Field(default_factory=list)
    distances: list[float] = Field(default_factory=list)


class GroundTruth(BaseModel):
    """Exact answers for a query set."""

    flavor: Literal["vector", "hybrid"]
    k: int = Field(..., ge=1)
    entries: list[GroundTruthEntry] = Field(default_factory=list)


class GraphQualityReport(BaseModel):
    """Mean fraction of each vertex's true k nearest neighbors in its adjacency."""

    quality: float = Field(..., ge=0.0, le=1.0)
    sampled_vertices: int
    k_used: int
    std_error: float = 0.0
    exact: bool = False


class DegreeStats(BaseModel):
    """Degree summary of a graph."""

    min: int
    mean: float
    max: int


class QueryRecord(BaseModel):
    """Per-query benchmark measurement."""

    recall: float | None
    ndc: int
    latency: float


class EvalReport(BaseModel):
    """One row of a benchmark sweep."""

    method: str
    n: int
    d: int
    m: int
    k: int
    l: int | None = None  # noqa: E741
    pool_size: int
    h: int
    seed: int
    records: list[QueryRecord] = Field(default_factory=list)
    recall_at_k: float = 0.0
    mean_ndc: float = 0.0
    speedup: float = 0.0
    qps: float = 0.0
    selectivity: float = 0.0
    excluded_queries: int = 0
    recall_convention: str = "hits in truth / min(k, |truth|); empty truth excluded"
    environment: str = ""

    def row(self) -> dict[str, Any]:
        """Values in report column order."""
        return {
            "method": self.method,
            "n": self.n,
            "d": self.d,
            "m": self.m,
            "k": self.k,
            "l": "" if self.l is None else self.l,
            "pool_size": self.pool_size,
            "h": self.h,
            "recall_at_k": f"{self.recall_at_k:.6f}",
            "mean_ndc": f"{self.mean_ndc:.3f}",
            "speedup": f"{self.speedup:.6f}",
            "qps": f"{self.qps:.3f}",
            "selectivity": f"{self.selectivity:.6f}",
            "seed": self.seed,
        }

    @property
    def total_time(self) -> float:
        return math.fsum(r.latency for r in self.records)


class RunConfig(BaseModel):
    """Everything a command needs to be reproduced; echoed into reports."""

    subcommand: str
    vectors: str | None = None
    attributes: str | None = None
    queries: str | None = None
    query_attributes: str | None = None
    index: str | None = None
    gt: str | None = None
    out: str | None = None
    report: str | None = None
    graph: Literal["npg-kgraph", "npg-nsw", "threshold"] = "npg-kgraph"
    mode: DistanceKind = DistanceKind.FUSION
    weights: WeightScheme = WeightScheme.RECOMMENDED
    omega_v: float = 1.0
    omega_l: float = 0.0
    method: str = "nhq-npg-kgraph"
    flavor: Literal["vector", "hybrid"] = "hybrid"
    build: BuildParams = Field(default_factory=BuildParams)
    search: SearchParams = Field(default_factory=SearchParams)
    sweep: list[int] = Field(default_factory=list)
    multiplier: int = Field(default=10, ge=1)
    filter_during_traversal: bool = False
    verify: bool = False
    n: int | None = None
    cardinalities: list[int] = Field(default_factory=list)
    seed: int = 42

    def fusion_weights(self, delta_max: float | None = None) -> FusionWeights:
        """Weights selected by the ``weights`` field.

        ``normalized`` needs ``delta_max``, which the build command estimates
        from the data.
        """
        if self.weights is WeightScheme.FIXED:
            return FusionWeights.fixed(self.omega_v, self.omega_l)
        if self.weights is WeightScheme.HARMONIC:
            return FusionWeights.harmonic()
        if self.weights is WeightScheme.NORMALIZED:
            if delta_max is None:
                raise UsageError("normalized weights need delta_max")
            return FusionWeights.normalized(delta_max)
        return FusionWeights.recommended()

    def distance_mode(self, delta_max: float | None = None) -> DistanceMode:
        if self.mode is DistanceKind.FUSION:
            return DistanceMode.fusion(self.fusion_weights(delta_max))
        return DistanceMode.euclidean()
