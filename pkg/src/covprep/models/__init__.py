"""
Regression model zoo with a uniform ``fit``/``predict`` contract.

``ModelSpec`` names a model kind, its hyperparameters and a seed;
``fit`` validates the spec, trains the matching estimator and wraps it in a
``TrainedModel`` that round-trips through a versioned JSON document.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from ..errors import InvalidHyperparameter, TooFewRows
from .ensemble import GradientBoostingRegressor, RandomForestRegressor
from .linear import LinearModel
from .mlp import MLPRegressor
from .neighbors import KNeighborsRegressor
from .preprocessing import ScalerParams, standardize_apply, standardize_fit
from .tree import DecisionTreeRegressor

FORMAT_VERSION = 1

KINDS = (
    "OLS",
    "Ridge",
    "Lasso",
    "ElasticNet",
    "KNN",
    "DecisionTree",
    "RandomForest",
    "GradientBoosting",
    "MLP",
)

DISPLAY_NAMES = {
    "OLS": "LinearRegression",
    "Ridge": "Ridge",
    "Lasso": "Lasso",
    "ElasticNet": "ElasticNet",
    "KNN": "KNeighborsRegressor",
    "DecisionTree": "DecisionTreeRegressor",
    "RandomForest": "RandomForestRegressor",
    "GradientBoosting": "GradientBoostingRegressor",
    "MLP": "MLPRegressor",
    "SVR": "SVR",
}

LINEAR_KINDS = ("OLS", "Ridge", "Lasso", "ElasticNet")
NONLINEAR_KINDS = ("KNN", "DecisionTree", "RandomForest", "GradientBoosting", "MLP")


def _nonneg(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0


def _pos(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _pos_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1


def _depth(v):
    return v is None or _pos_int(v)


def _unit(v):
    return isinstance(v, (int, float)) and 0 <= v <= 1


def _layers(v):
    return isinstance(v, (list, tuple)) and len(v) > 0 and all(_pos_int(h) for h in v)


SCHEMA: dict[str, dict[str, Callable[[Any], bool]]] = {
    "OLS": {},
    "Ridge": {"alpha": _nonneg},
    "Lasso": {"alpha": _nonneg},
    "ElasticNet": {"alpha": _nonneg, "l1_ratio": _unit},
    "KNN": {"n_neighbors": _pos_int},
    "DecisionTree": {"max_depth": _depth, "min_samples_leaf": _pos_int},
    "RandomForest": {"n_estimators": _pos_int, "max_depth": _depth, "min_samples_leaf": _pos_int},
    "GradientBoosting": {
        "n_estimators": _pos_int,
        "learning_rate": lambda v: _pos(v) and v <= 1,
        "max_depth": _pos_int,
        "min_samples_leaf": _pos_int,
    },
    "MLP": {
        "hidden_layers": _layers,
        "learning_rate": _pos,
        "batch_size": _pos_int,
        "max_epochs": _pos_int,
        "momentum": lambda v: isinstance(v, (int, float)) and 0 <= v < 1,
        "patience": _pos_int,
    },
}

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "OLS": {},
    "Ridge": {"alpha": [1e-3, 1e-2, 1e-1, 1.0, 10.0]},
    "Lasso": {"alpha": [1e-3, 1e-2, 1e-1, 1.0, 10.0]},
    "ElasticNet": {"alpha": [1e-3, 1e-2, 1e-1, 1.0, 10.0], "l1_ratio": [0.2, 0.5, 0.8]},
    "KNN": {"n_neighbors": [3, 5, 9, 15]},
    "DecisionTree": {"max_depth": [4, 8, 16, None], "min_samples_leaf": [1, 5]},
    "RandomForest": {"n_estimators": [100, 300]},
    "GradientBoosting": {
        "n_estimators": [200, 500],
        "learning_rate": [0.05, 0.1],
        "max_depth": [2, 3],
    },
    "MLP": {
        "hidden_layers": [[64], [64, 32]],
        "learning_rate": [1e-3, 1e-2],
        "batch_size": [32],
        "max_epochs": [500],
    },
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCHEMA:
            raise InvalidHyperparameter(f"unknown model kind {self.kind!r}")
        schema = SCHEMA[self.kind]
        hp = dict(self.hyperparameters)
        for name, value in hp.items():
            if name not in schema:
                raise InvalidHyperparameter(f"{self.kind}: unknown hyperparameter {name!r}")
            if not schema[name](value):
                raise InvalidHyperparameter(f"{self.kind}: invalid {name}={value!r}")
        if "hidden_layers" in hp:
            hp["hidden_layers"] = [int(h) for h in hp["hidden_layers"]]
        object.__setattr__(self, "hyperparameters", hp)

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES[self.kind]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["kind"], d.get("hyperparameters", {}), d.get("seed", 0))


def expand_grid(kind: str, grid: Mapping[str, Sequence] | None = None, seed: int = 0) -> list[ModelSpec]:
    """All hyperparameter combinations of ``grid`` in row-major order."""
    grid = DEFAULT_GRIDS[kind] if grid is None else grid
    names = list(grid)
    combos = itertools.product(*(grid[n] for n in names)) if names else [()]
    return [ModelSpec(kind, dict(zip(names, values)), seed) for values in combos]


def make_estimator(spec: ModelSpec):
    hp = spec.hyperparameters
    kind = spec.kind
    if kind == "OLS":
        return LinearModel(alpha=0.0, l1_ratio=0.0)
    if kind == "Ridge":
        return LinearModel(alpha=hp.get("alpha", 1.0), l1_ratio=0.0)
    if kind == "Lasso":
        return LinearModel(alpha=hp.get("alpha", 1.0), l1_ratio=1.0)
    if kind == "ElasticNet":
        return LinearModel(alpha=hp.get("alpha", 1.0), l1_ratio=hp.get("l1_ratio", 0.5))
    if kind == "KNN":
        return KNeighborsRegressor(hp.get("n_neighbors", 5))
    if kind == "DecisionTree":
        return DecisionTreeRegressor(hp.get("max_depth"), hp.get("min_samples_leaf", 1))
    if kind == "RandomForest":
        return RandomForestRegressor(hp.get("n_estimators", 100), hp.get("max_depth"),
                                     hp.get("min_samples_leaf", 1), seed=spec.seed)
    if kind == "GradientBoosting":
        return GradientBoostingRegressor(hp.get("n_estimators", 200), hp.get("learning_rate", 0.1),
                                         hp.get("max_depth", 3), hp.get("min_samples_leaf", 1))
    return MLPRegressor(**hp, seed=spec.seed)


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: Any
    feature_names: tuple[str, ...]
    n_rows: int

    def predict(self, X) -> np.ndarray:
        return predict(self, X)

    def to_dict(self) -> dict:
        return {
            "format": "covprep-model",
            "version": FORMAT_VERSION,
            **self.spec.to_dict(),
            "feature_names": list(self.feature_names),
            "n_rows": self.n_rows,
            "state": self.estimator.get_state(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        d = json.loads(text)
        if d.get("format") != "covprep-model" or d.get("version") != FORMAT_VERSION:
            raise ValueError("not a covprep model document of a supported version")
        spec = ModelSpec.from_dict(d)
        est = make_estimator(spec)
        est.set_state(d["state"])
        return cls(spec, est, tuple(d["feature_names"]), int(d["n_rows"]))


def fit(spec: ModelSpec, X, y, feature_names: Sequence[str] | None = None) -> TrainedModel:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n != y.size:
        raise ValueError(f"X has {n} rows but y has {y.size}")
    if n == 0:
        raise TooFewRows("cannot fit on zero rows")
    if spec.kind == "OLS" and n <= p:
        raise TooFewRows(f"OLS needs more rows than columns ({n} <= {p})")
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(p))
    est = make_estimator(spec).fit(X, y)
    return TrainedModel(spec, est, names, n)


def predict(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != len(model.feature_names):
        raise ValueError(
            f"model expects {len(model.feature_names)} features, got {X.shape[1]}"
        )
    return model.estimator.predict(X)


from .search import kfold_grid_search, contiguous_folds  # noqa: E402

__all__ = [
    "KINDS",
    "DEFAULT_GRIDS",
    "DISPLAY_NAMES",
    "LINEAR_KINDS",
    "NONLINEAR_KINDS",
    "ModelSpec",
    "TrainedModel",
    "ScalerParams",
    "expand_grid",
    "fit",
    "predict",
    "kfold_grid_search",
    "contiguous_folds",
    "standardize_fit",
    "standardize_apply",
]
