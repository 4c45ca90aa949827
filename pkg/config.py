#!/usr/bin/env python3
"""
Configuration module for the sparsification harness

``Config`` holds library-wide settings (norm backend, tolerances, Monte
Carlo defaults, search limits, logging, metrics). ``RunConfig`` describes a
single CLI run and is embedded in every artifact so the run can be
repeated exactly. There is no environment-variable layer.
"""

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from core.linalg import NORM_METHODS


@dataclass
class LinalgConfig:
    """Norm backend and iteration limits."""
    backend: str = "numpy"
    jacobi_tol: float = 1e-15
    jacobi_max_sweeps: int = 100
    power_max_iter: int = 10_000
    power_rel_tol: float = 1e-12


@dataclass
class ValidationConfig:
    """Tolerances used by the decomposition validators."""
    tolerance: float = 1e-9
    psd_tolerance: float = 1e-10


@dataclass
class SamplingConfig:
    """Monte Carlo defaults."""
    replicates: int = 200
    z: float = 1.96
    rng: str = "PCG64"
    max_attempts: int = 100
    workers: int = 1
    constant: float = 2.0


@dataclass
class VerifierConfig:
    """Search and optimisation limits of the lower-bound verifiers."""
    exhaustive_threshold: int = 1_000_000
    random_samples: int = 100_000
    subgradient_iterations: int = 5000
    supports: int = 200


@dataclass
class LoggingConfig:
    """Logging configuration."""
    level: str = "WARNING"
    file: Optional[str] = None
    max_size_mb: int = 100
    backup_count: int = 5


@dataclass
class MetricsConfig:
    """Metrics configuration."""
    metrics_file: Optional[str] = None


_SECTIONS = {
    "linalg": LinalgConfig,
    "validation": ValidationConfig,
    "sampling": SamplingConfig,
    "verifier": VerifierConfig,
    "logging": LoggingConfig,
    "metrics": MetricsConfig,
}

RESULT_SECTIONS = ("linalg", "validation", "sampling", "verifier")


@dataclass
class Config:
    """Main configuration class."""

    name: str = "sparsify-harness"
    version: str = "1.0.0"

    linalg: LinalgConfig = field(default_factory=LinalgConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    verifier: VerifierConfig = field(default_factory=VerifierConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def __post_init__(self):
        """Post-initialization setup."""
        self._validate()

    def _validate(self):
        """Validate configuration."""
        if self.linalg.backend not in NORM_METHODS:
            raise ValueError(f"Unknown norm backend: {self.linalg.backend}")
        if self.validation.tolerance <= 0:
            raise ValueError("Tolerances must be positive")
        if self.sampling.replicates < 1:
            raise ValueError("Replicates must be positive")
        if self.sampling.max_attempts < 1:
            raise ValueError("Max attempts must be positive")
        if self.sampling.workers < 1:
            raise ValueError("Workers must be positive")
        if self.sampling.rng != "PCG64":
            raise ValueError(f"Unsupported generator: {self.sampling.rng}")
        if self.verifier.exhaustive_threshold < 1 or self.verifier.random_samples < 1:
            raise ValueError("Search limits must be positive")
        if self.verifier.subgradient_iterations < 0:
            raise ValueError("Subgradient iterations must be non-negative")

    def linalg_settings(self) -> Dict[str, Any]:
        """Keyword arguments for ``core.linalg.configure_linalg``."""
        return asdict(self.linalg)

    def result_settings(self) -> Dict[str, Any]:
        """The sections that can change a run's result; logging and metrics cannot."""
        return {name: asdict(getattr(self, name)) for name in RESULT_SECTIONS}

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary."""
        return asdict(self)

    def save_to_file(self, filepath: str):
        """Save configuration to a JSON or YAML file (by suffix)."""
        with open(filepath, "w", encoding="utf-8") as f:
            if Path(filepath).suffix.lower() in (".yaml", ".yml"):
                yaml.safe_dump(self.to_dict(), f, sort_keys=True)
            else:
                json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Config":
        kwargs: Dict[str, Any] = {}
        for key, value in data.items():
            if key in _SECTIONS:
                section = _SECTIONS[key]
                known = {f.name for f in fields(section)}
                unknown = set(value) - known
                if unknown:
                    raise ValueError(f"Unknown keys in config section '{key}': {sorted(unknown)}")
                kwargs[key] = section(**value)
            elif key in ("name", "version"):
                kwargs[key] = value
            else:
                raise ValueError(f"Unknown config key: {key}")
        return cls(**kwargs)

    @classmethod
    def load_from_file(cls, filepath: str) -> "Config":
        """Load configuration from a JSON or YAML file."""
        with open(filepath, "r", encoding="utf-8") as f:
            if Path(filepath).suffix.lower() in (".yaml", ".yml"):
                data = yaml.safe_load(f) or {}
            else:
                data = json.load(f)
        return cls.from_dict(data)

    def __str__(self) -> str:
        return f"Config(name={self.name}, version={self.version}, backend={self.linalg.backend})"


# ---------------------------------------------------------------------------
# Per-run configuration
# ---------------------------------------------------------------------------

FORMATS = ("json", "csv")


class RunConfig(BaseModel):
    """Everything a single harness run depends on."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str
    dim: Optional[int] = Field(default=None, ge=1)
    dims: Optional[List[int]] = None
    gamma: Optional[float] = Field(default=None, gt=0)
    eps: Optional[float] = Field(default=None, gt=0)
    delta: Optional[float] = Field(default=None, ge=0)
    k: Optional[int] = Field(default=None, ge=1)
    ks: Optional[List[int]] = None
    t: Optional[int] = Field(default=None, ge=1)
    c: Optional[float] = Field(default=None, gt=0)
    p: Optional[float] = None
    trials: Optional[int] = Field(default=None, ge=1)
    replicates: Optional[int] = Field(default=None, ge=1)
    max_attempts: Optional[int] = Field(default=None, ge=1)
    supports: Optional[int] = Field(default=None, ge=1)
    support_size: Optional[int] = Field(default=None, ge=1)
    iterations: Optional[int] = Field(default=None, ge=0)
    samples: Optional[int] = Field(default=None, ge=1)
    quantile: Optional[float] = Field(default=None, gt=0, lt=1)
    seed: int = Field(default=0, ge=0)
    mode: str = "auto"
    family: str = "cross-polytope"
    padding: str = "zero"
    input: Optional[str] = None
    output: Optional[str] = None
    format: str = "json"

    @field_validator("dims", "ks")
    @classmethod
    def check_positive_entries(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None:
            if not value:
                raise ValueError("list must not be empty")
            if any(v < 1 for v in value):
                raise ValueError("entries must be positive")
        return value

    @field_validator("format")
    @classmethod
    def check_format(cls, value: str) -> str:
        if value not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}")
        return value

    @field_validator("mode")
    @classmethod
    def check_mode(cls, value: str) -> str:
        if value not in ("auto", "exhaustive", "random"):
            raise ValueError("mode must be auto, exhaustive or random")
        return value

    @model_validator(mode="after")
    def check_constructions_are_json(self) -> "RunConfig":
        if self.format == "csv" and self.command.startswith("construct_"):
            raise ValueError("constructions are emitted as JSON only")
        return self

    def embedded(self, harness: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """
        The config as stored in artifacts; the output path does not affect the result.

        ``harness`` holds the ``Config.result_settings()`` the run used, so the
        defaults that flags left unset are recorded as well.
        """
        data = self.model_dump(exclude={"output"})
        if harness is not None:
            data["harness"] = harness
        return data

    @classmethod
    def from_embedded(cls, data: Dict[str, Any]) -> Tuple["RunConfig", Optional[Config]]:
        """Split an artifact's run_config back into the run and the harness config."""
        values = dict(data)
        harness = values.pop("harness", None)
        return cls(**values), (Config.from_dict(harness) if harness is not None else None)
