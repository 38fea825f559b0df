"""Application configuration using Pydantic settings."""

from pathlib import Path
from typing import Any

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support.

    Every field can be overridden with an ``NHQ_``-prefixed environment
    variable or a line in ``.env``.
    """

    # Application
    app_name: str = "nhq-search"
    app_version: str = "1.0.0"
    debug: bool = False
    log_level: str = "INFO"
    log_to_file: bool = False
    logs_dir: Path = Field(default_factory=lambda: Path.home() / ".nhq" / "logs")

    # Reproducibility
    default_seed: int = Field(default=42, ge=0)
    build_threads: int = Field(default=1, ge=1)

    # Graph construction
    degree_bound: int = Field(default=20, ge=1)
    candidate_pool_size: int = Field(default=60, ge=1)
    quality_threshold: float = Field(default=0.8, gt=0.0, le=1.0)
    kgraph_max_iterations: int = Field(default=30, ge=1)
    quality_sample_size: int = Field(default=500, ge=1)
    graph_quality_sample: int = Field(default=1000, ge=1)
    threshold_max_objects: int = Field(default=20_000, ge=1)

    # Search
    pool_size: int = Field(default=100, ge=1)
    stage_divisor: int = Field(default=2, ge=1)
    k_results: int = Field(default=10, ge=1)
    search_seeds: int = Field(default=1, ge=1)
    strategy_b_multiplier: int = Field(default=10, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="NHQ_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    def ensure_directories(self) -> None:
        """Ensure the log directory exists."""
        self.logs_dir.mkdir(parents=True, exist_ok=True)

    def to_dict(self) -> dict[str, Any]:
        """Convert settings to dictionary."""
        return self.model_dump()


# Global settings instance
settings = Settings()
