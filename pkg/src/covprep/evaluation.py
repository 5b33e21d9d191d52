"""
Chronological splitting, model scoring and report assembly.

Each model kind is tuned by k-fold grid search on the training split,
refit on the whole training split, and scored on all three splits. Reports
list models by ascending test RMSE and serialize to a CSV with the columns
Pipeline | Model | Test RMSE | Test R² | RMSE Variance, and to a JSON
document carrying every metric and cross-validation table.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TooFewRows, ZeroVariance
from .metrics import r2, rmse, rmse_variance
from .models import (
    DISPLAY_NAMES,
    KINDS,
    NONLINEAR_KINDS,
    ScalerParams,
    TrainedModel,
    expand_grid,
    fit,
    kfold_grid_search,
    predict,
    standardize_apply,
    standardize_fit,
)

__all__ = [
    "rmse",
    "r2",
    "rmse_variance",
    "SplitSpec",
    "split_chronological",
    "ModelResult",
    "EvalReport",
    "evaluate_pipeline",
    "series_csv",
]

NOT_IMPLEMENTED = "not implemented"
ZERO_VARIANCE = "ZeroVariance"
REPORT_HEADER = ("Pipeline", "Model", "Test RMSE", "Test R²", "RMSE Variance")


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.7
    val: float = 0.15
    test: float = 0.15
    mode: str = "chronological"

    def __post_init__(self):
        fr = (self.train, self.val, self.test)
        if any(not f > 0 for f in fr):
            raise ValueError(f"split fractions must be positive, got {fr}")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise ValueError(f"split fractions must sum to 1, got {sum(fr)!r}")
        if self.mode != "chronological":
            raise ValueError(f"only chronological splits are supported, got {self.mode!r}")


def split_chronological(n: int, spec: SplitSpec = SplitSpec()) -> tuple[range, range, range]:
    """Contiguous train/validation/test index ranges, in time order.

    Boundaries fall at ``floor(n * train)`` and ``floor(n * (train + val))``.
    """
    if not hasattr(n, "__index__"):
        n = len(n)
    a = math.floor(n * spec.train)
    b = math.floor(n * (spec.train + spec.val))
    parts = (range(0, a), range(a, b), range(b, n))
    if any(len(p) == 0 for p in parts):
        raise TooFewRows(f"{n} rows leave an empty split under {spec}")
    return parts


def _num(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return v


@dataclass
class ModelResult:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    rmse: dict = field(default_factory=dict)
    r2: dict = field(default_factory=dict)
    rmse_variance: float = math.nan
    status: str = "ok"
    cv_table: list = field(default_factory=list)

    @property
    def model(self) -> str:
        return DISPLAY_NAMES[self.kind]

    @property
    def implemented(self) -> bool:
        return self.status != NOT_IMPLEMENTED

    @property
    def test_rmse(self) -> float:
        return self.rmse.get("test", math.nan)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "kind": self.kind,
            "status": self.status,
            "hyperparameters": self.hyperparameters,
            "rmse": {k: _num(v) for k, v in self.rmse.items()},
            "r2": {k: _num(v) for k, v in self.r2.items()},
            "rmse_variance": _num(self.rmse_variance),
            "cv_table": self.cv_table,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelResult":
        nan = lambda m: {k: (math.nan if v is None else v) for k, v in m.items()}  # noqa: E731
        return cls(
            kind=d["kind"],
            hyperparameters=d.get("hyperparameters", {}),
            rmse=nan(d.get("rmse", {})),
            r2=nan(d.get("r2", {})),
            rmse_variance=math.nan if d.get("rmse_variance") is None else d["rmse_variance"],
            status=d.get("status", "ok"),
            cv_table=d.get("cv_table", []),
        )


@dataclass
class EvalReport:
    pipeline: str
    results: list[ModelResult]
    metadata: dict = field(default_factory=dict)
    scaler: ScalerParams | None = None
    models: dict = field(default_factory=dict)

    def best(self, kinds: Sequence[str] | None = None) -> ModelResult:
        pool = [r for r in self.results if r.implemented and (kinds is None or r.kind in kinds)]
        return min(pool, key=lambda r: r.test_rmse)

    def best_nonlinear(self) -> ModelResult:
        return self.best(NONLINEAR_KINDS)

    def rows(self) -> list[tuple[str, ...]]:
        out = []
        for r in self.results:
            if not r.implemented:
                out.append((self.pipeline, r.model, NOT_IMPLEMENTED, NOT_IMPLEMENTED, NOT_IMPLEMENTED))
                continue
            test_r2 = r.r2.get("test", math.nan)
            r2_cell = ZERO_VARIANCE if math.isnan(test_r2) else f"{test_r2:.3f}"
            out.append((self.pipeline, r.model, f"{r.test_rmse:.3f}", r2_cell,
                        f"{r.rmse_variance:.3f}"))
        return out

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(REPORT_HEADER)
        w.writerows(self.rows())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "metadata": self.metadata,
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "results": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        scaler = None if d.get("scaler") is None else ScalerParams.from_dict(d["scaler"])
        return cls(d["pipeline"], [ModelResult.from_dict(r) for r in d["results"]],
                   d.get("metadata", {}), scaler)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))


def _score(model: TrainedModel, splits: dict) -> tuple[dict, dict, bool]:
    rm, rr, degenerate = {}, {}, False
    for name, (X, y) in splits.items():
        yhat = predict(model, X)
        rm[name] = rmse(y, yhat)
        try:
            rr[name] = r2(y, yhat)
        except ZeroVariance:
            rr[name] = math.nan
            degenerate = degenerate or name == "test"
    return rm, rr, degenerate


def evaluate_pipeline(
    frame,
    features: Sequence[str],
    target: str,
    config,
    pipeline: str | None = None,
) -> EvalReport:
    """Tune, fit and score every configured model kind on one processed frame.

    The scaler is fitted on the training rows only and applied to all three
    splits. An SVR row is appended with a not-implemented marker.
    """
    pipeline = pipeline or config.pipeline
    spec = SplitSpec(*config.split)
    tr, va, te = split_chronological(len(frame), spec)
    X = frame.matrix(features)
    y = np.asarray(frame[target], dtype=np.float64)
    scaler = standardize_fit(X[tr.start:tr.stop])
    Xs = standardize_apply(X, scaler)
    splits = {
        "train": (Xs[tr.start:tr.stop], y[tr.start:tr.stop]),
        "val": (Xs[va.start:va.stop], y[va.start:va.stop]),
        "test": (Xs[te.start:te.stop], y[te.start:te.stop]),
    }
    Xtr, ytr = splits["train"]

    results, models = [], {}
    for kind in (k for k in KINDS if k in config.models):
        grid = expand_grid(kind, config.grid_for(kind), seed=config.seed)
        best, table = kfold_grid_search(grid, Xtr, ytr, k=config.cv_folds)
        model = fit(best, Xtr, ytr, list(features))
        rm, rr, degenerate = _score(model, splits)
        results.append(ModelResult(
            kind=kind,
            hyperparameters=dict(best.hyperparameters),
            rmse=rm,
            r2=rr,
            rmse_variance=rmse_variance(rm["train"], rm["val"], rm["test"]),
            status=ZERO_VARIANCE if degenerate else "ok",
            cv_table=[{"hyperparameters": row["hyperparameters"], "fold_rmse": row["fold_rmse"],
                       "mean_rmse": row["mean_rmse"]} for row in table],
        ))
        models[kind] = model
    results.sort(key=lambda r: r.test_rmse)
    results.append(ModelResult(kind="SVR", status=NOT_IMPLEMENTED))
    metadata = {
        "target": target,
        "features": list(features),
        "split": {"train": [tr.start, tr.stop], "val": [va.start, va.stop],
                  "test": [te.start, te.stop]},
        "dates": {"train": [str(frame.dates[tr.start]), str(frame.dates[tr.stop - 1])],
                  "val": [str(frame.dates[va.start]), str(frame.dates[va.stop - 1])],
                  "test": [str(frame.dates[te.start]), str(frame.dates[te.stop - 1])]},
        "seed": config.seed,
    }
    return EvalReport(pipeline, results, metadata, scaler, models)


def series_csv(dates, original, processed) -> str:
    """Date / original / processed table of one column, for plotting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("date", "original", "processed"))
    for d, a, b in zip(dates, original, processed):
        w.writerow((str(d), "" if np.isnan(a) else repr(float(a)), "" if np.isnan(b) else repr(float(b))))
    return buf.getvalue()
