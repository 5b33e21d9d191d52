"""
Pipeline configuration.

Every threshold, ratio, seed and grid a run depends on lives in one flat
JSON-serializable record. Command-line flags override values read from a
config file.
"""

from __future__ import annotations

import dataclasses
import json
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, InvalidHyperparameter
from .models import DEFAULT_GRIDS, KINDS, expand_grid
from .outlier import Replacement

PIPELINES = ("standard", "custom")


@dataclass(frozen=True)
class PipelineConfig:
    input: str | None = None
    location: str = "IND"
    start: str = "2020-01-05"
    end: str = "2024-08-11"
    pipeline: str = "standard"
    target: str = "new_deaths"
    corr_th: float = 0.8
    vif_th: float = 10.0
    z_th: float = 2.0
    window: int = 30
    split: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 0
    out: str = "out"
    models: tuple[str, ...] = KINDS
    grids: dict = field(default_factory=dict)
    standard_replacement: str = "Interpolation"
    custom_replacement: str = "Winsorize"
    extrapolation: str = "linear"
    cv_folds: int = 5
    pfi_repeats: int = 10
    mi_k: int = 3
    exclude_features: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "split", tuple(float(f) for f in self.split))
        object.__setattr__(self, "models", tuple(self.models))
        if self.exclude_features is not None:
            object.__setattr__(self, "exclude_features", tuple(self.exclude_features))
        self.validate()

    def validate(self) -> None:
        if self.pipeline not in PIPELINES:
            raise ConfigError(f"pipeline must be one of {PIPELINES}, got {self.pipeline!r}")
        for name in ("corr_th", "vif_th", "z_th"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if not (isinstance(self.window, int) and self.window >= 3):
            raise ConfigError(f"window must be an integer >= 3, got {self.window!r}")
        if len(self.split) != 3 or any(not f > 0 for f in self.split):
            raise ConfigError(f"split needs three positive fractions, got {self.split!r}")
        if abs(sum(self.split) - 1.0) > 1e-12:
            raise ConfigError(f"split fractions must sum to 1, got {sum(self.split)!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        for kind in self.models:
            if kind not in KINDS:
                raise ConfigError(f"unknown model kind {kind!r}")
        for kind, grid in self.grids.items():
            if kind not in KINDS:
                raise ConfigError(f"grid given for unknown model kind {kind!r}")
            try:
                expand_grid(kind, grid)
            except InvalidHyperparameter as exc:
                raise ConfigError(str(exc)) from None
        for name in ("standard_replacement", "custom_replacement"):
            try:
                Replacement(getattr(self, name))
            except ValueError:
                raise ConfigError(f"{name} must be Interpolation or Winsorize") from None
        if self.extrapolation not in ("linear", "constant"):
            raise ConfigError(f"extrapolation must be linear or constant, got {self.extrapolation!r}")
        for name in ("cv_folds", "pfi_repeats", "mi_k"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be at least 2")
        try:
            start, end = np.datetime64(self.start, "D"), np.datetime64(self.end, "D")
        except ValueError:
            raise ConfigError(f"bad date range {self.start!r}..{self.end!r}") from None
        if start > end:
            raise ConfigError(f"start {self.start} is after end {self.end}")

    def grid_for(self, kind: str) -> dict:
        return self.grids.get(kind, DEFAULT_GRIDS[kind])

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["split"] = list(self.split)
        d["models"] = list(self.models)
        if self.exclude_features is not None:
            d["exclude_features"] = list(self.exclude_features)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str | Path, **overrides) -> "PipelineConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config file must hold a JSON object")
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


def stage_rng(seed: int, label: str) -> np.random.Generator:
    """Generator for one pipeline stage, derived from the run seed and a fixed label."""
    return np.random.default_rng([seed, zlib.crc32(label.encode("utf-8"))])
