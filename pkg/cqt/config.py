"""Configuration loading from YAML run profiles with env var interpolation."""

from __future__ import annotations

import os
import re
from pathlib import Path

import yaml
from pydantic import BaseModel, Field, field_validator

from cqt.models.maser import MaserParams

# Hot-bath occupations of the default sweep, spanning 0.5..10.
DEFAULT_N_H_VALUES = [0.5, 0.7, 1.0, 1.4, 2.0, 3.0, 4.0, 5.5, 7.5, 10.0]
DEFAULT_G_RATIO_VALUES = [0.025, 0.1, 0.25]

FRAMEWORKS = ("standard", "io", "sc")
MODELS = ("composite", "semiclassical")
AXES = ("n_H", "g_ratio")


def _interpolate_env(value: str) -> str:
    """Replace ${ENV_VAR} patterns with environment variable values."""
    return re.sub(
        r"\$\{(\w+)\}",
        lambda m: os.environ.get(m.group(1), m.group(0)),
        value,
    )


def _walk_interpolate(obj):
    """Recursively interpolate env vars in a config dict."""
    if isinstance(obj, str):
        return _interpolate_env(obj)
    if isinstance(obj, dict):
        return {k: _walk_interpolate(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_walk_interpolate(v) for v in obj]
    return obj


class SweepConfig(BaseModel):
    axis: str = "n_H"
    values: list[float] | None = None

    @field_validator("axis")
    @classmethod
    def validate_axis(cls, v: str) -> str:
        if v not in AXES:
            raise ValueError(f"sweep axis must be one of {', '.join(AXES)}")
        return v

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: list[float] | None) -> list[float] | None:
        if v is None:
            return v
        if not v:
            raise ValueError("sweep values must not be empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("sweep values must be strictly increasing")
        return v

    def resolved_values(self) -> list[float]:
        if self.values is not None:
            return list(self.values)
        return list(DEFAULT_N_H_VALUES if self.axis == "n_H" else DEFAULT_G_RATIO_VALUES)


class SolverConfig(BaseModel):
    steady_tol: float = 1e-10
    noise_method: str = "drazin"
    fd_step: float = 1e-2
    frame: str = "lab"
    check_cutoff: bool = False
    cutoff_step: int = 5

    @field_validator("noise_method")
    @classmethod
    def validate_noise_method(cls, v: str) -> str:
        if v not in ("drazin", "tilted_fd"):
            raise ValueError("noise_method must be 'drazin' or 'tilted_fd'")
        return v

    @field_validator("frame")
    @classmethod
    def validate_frame(cls, v: str) -> str:
        if v not in ("lab", "displaced"):
            raise ValueError("frame must be 'lab' or 'displaced'")
        return v

    @field_validator("steady_tol", "fd_step")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v


class OutputConfig(BaseModel):
    path: str = "results/sweep.csv"
    format: str = "csv"

    @field_validator("format")
    @classmethod
    def validate_format(cls, v: str) -> str:
        if v not in ("csv", "json"):
            raise ValueError("output format must be 'csv' or 'json'")
        return v


class ConvergenceConfig(BaseModel):
    cutoffs: list[int] = Field(default_factory=lambda: [30, 35, 40])
    scales: list[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0])
    observable: str = "J_C"
    threshold: float = 1e-4
    edge_threshold: float = 1e-6
    scale_frame: str = "displaced"
    scale_cutoff: int | None = None

    @field_validator("cutoffs")
    @classmethod
    def validate_cutoffs(cls, v: list[int]) -> list[int]:
        if len(v) < 2:
            raise ValueError("convergence needs at least two cutoffs")
        return v

    @field_validator("observable")
    @classmethod
    def validate_observable(cls, v: str) -> str:
        if v not in ("n_photon", "J_C", "J_H"):
            raise ValueError("observable must be one of n_photon, J_C, J_H")
        return v


class RunnerConfig(BaseModel):
    max_workers: int = 1


class LoggingConfig(BaseModel):
    level: str = "INFO"
    dir: str | None = None


class RunConfig(BaseModel):
    model: MaserParams = Field(default_factory=MaserParams)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    models: list[str] = Field(default_factory=lambda: list(MODELS))
    frameworks: list[str] = Field(default_factory=lambda: list(FRAMEWORKS))
    currents_to_count: list[str] = Field(default_factory=lambda: ["C"])
    solver: SolverConfig = Field(default_factory=SolverConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    convergence: ConvergenceConfig = Field(default_factory=ConvergenceConfig)
    runner: RunnerConfig = Field(default_factory=RunnerConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @field_validator("frameworks")
    @classmethod
    def validate_frameworks(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("at least one framework is required")
        unknown = set(v) - set(FRAMEWORKS)
        if unknown:
            raise ValueError(f"unknown frameworks: {sorted(unknown)}")
        return v

    @field_validator("models")
    @classmethod
    def validate_models(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("at least one model is required")
        unknown = set(v) - set(MODELS)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")
        return v

    @field_validator("currents_to_count")
    @classmethod
    def validate_currents(cls, v: list[str]) -> list[str]:
        unknown = set(v) - {"H", "C", "cavity"}
        if unknown:
            raise ValueError(f"unknown counted currents: {sorted(unknown)}")
        return v


def load_config(path: str | Path = "cqt.yaml") -> RunConfig:
    """Load config from YAML file with env var interpolation."""
    path = Path(path)
    if path.exists():
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
        raw = _walk_interpolate(raw)
    else:
        raw = {}
    return RunConfig(**raw)
