"""
Iterative feature selection.

One correlation filter pass, then a loop that scores every remaining
feature by permutation importance (PFI), mutual information (MI) and
single-feature impact (SFI), computes variance inflation factors, and drops
the least important feature among those whose VIF exceeds the threshold,
followed by a cross-validated lasso pass that drops zero-coefficient
features. The loop ends as soon as every VIF is at or below the threshold.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .errors import Degenerate, LengthMismatch, TooFewSamples
from .metrics import rmse
from .models import ModelSpec, TrainedModel, contiguous_folds, fit, predict
from .models.linear import coordinate_descent, lambda_max
from .models.preprocessing import standardize_apply, standardize_fit

R2_INF_LIMIT = 1e-12
LASSO_GRID_SIZE = 20
LASSO_GRID_SPAN = (1e-4, 1e1)
ZERO_COEF = 1e-10
MI_JITTER = 1e-10


class Reason(enum.Enum):
    EMPTY = "Empty"
    CONSTANT = "Constant"
    CORRELATED = "Correlated"
    HIGH_VIF = "HighVIF"
    ZERO_COEFFICIENT = "ZeroCoefficient"


@dataclass(frozen=True)
class FeatureMatrix:
    names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=np.float64).ravel()
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.shape[1] != len(self.names):
            raise LengthMismatch(f"{X.shape[1]} columns but {len(self.names)} names")
        if X.shape[0] != y.size:
            raise LengthMismatch(f"X has {X.shape[0]} rows but y has {y.size}")

    @property
    def n_features(self) -> int:
        return len(self.names)

    def keep(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.names.index(n) for n in names]
        return FeatureMatrix(tuple(names), self.X[:, idx], self.y)


@dataclass(frozen=True)
class ImportanceRecord:
    feature: str
    pfi: float
    mi: float
    sfi: float
    vif: float
    combined: float

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "pfi": self.pfi,
            "mi": self.mi,
            "sfi": self.sfi,
            "vif": "inf" if math.isinf(self.vif) else self.vif,
            "combined": self.combined,
        }


@dataclass(frozen=True)
class Removal:
    feature: str
    reason: Reason

    def to_dict(self) -> dict:
        return {"feature": self.feature, "reason": self.reason.value}


@dataclass
class Iteration:
    records: list[ImportanceRecord]
    removed: list[Removal] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "records": [r.to_dict() for r in self.records],
            "removed": [r.to_dict() for r in self.removed],
        }


@dataclass
class SelectionTrace:
    initial_features: list[str]
    correlation_dropped: list[Removal] = field(default_factory=list)
    iterations: list[Iteration] = field(default_factory=list)
    final_features: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def removals(self) -> list[Removal]:
        out = list(self.correlation_dropped)
        for it in self.iterations:
            out.extend(it.removed)
        return out

    def final_records(self) -> list[ImportanceRecord]:
        """Scores of the surviving features from the terminating iteration."""
        if not self.iterations:
            return []
        return list(self.iterations[-1].records)

    def to_dict(self) -> dict:
        return {
            "initial_features": list(self.initial_features),
            "correlation_dropped": [r.to_dict() for r in self.correlation_dropped],
            "iterations": [it.to_dict() for it in self.iterations],
            "final_features": list(self.final_features),
            "metadata": dict(self.metadata),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionTrace":
        def removal(r):
            return Removal(r["feature"], Reason(r["reason"]))

        def record(r):
            v = r["vif"]
            return ImportanceRecord(r["feature"], r["pfi"], r["mi"], r["sfi"],
                                    math.inf if v == "inf" else float(v), r["combined"])

        return cls(
            initial_features=list(d["initial_features"]),
            correlation_dropped=[removal(r) for r in d["correlation_dropped"]],
            iterations=[Iteration([record(r) for r in it["records"]],
                                  [removal(r) for r in it["removed"]])
                        for it in d["iterations"]],
            final_features=list(d["final_features"]),
            metadata=dict(d.get("metadata", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "SelectionTrace":
        return cls.from_dict(json.loads(text))


# --------------------------------------------------------------------------
# correlation filter
# --------------------------------------------------------------------------


def _abs_corr_with(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt((Xc**2).sum(axis=0) * (yc @ yc))
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.abs(Xc.T @ yc) / denom
    return np.nan_to_num(c, nan=0.0)


def correlation_drops(fm: FeatureMatrix, corr_th: float = 0.8) -> list[Removal]:
    """Features removed by the correlation filter, in removal order."""
    drops = []
    alive = []
    for j, name in enumerate(fm.names):
        col = fm.X[:, j]
        if not np.all(np.isfinite(col)):
            drops.append(Removal(name, Reason.EMPTY))
        elif np.all(col == col[0]) or col.std() < 1e-12 * max(1.0, abs(col.mean())):
            drops.append(Removal(name, Reason.CONSTANT))
        else:
            alive.append(j)
    if len(alive) < 2:
        return drops

    X = fm.X[:, alive]
    target_corr = _abs_corr_with(X, fm.y)
    corr = np.abs(np.corrcoef(X, rowvar=False))
    iu, ju = np.triu_indices(len(alive), k=1)
    strength = corr[iu, ju]
    hot = np.flatnonzero(strength > corr_th)
    hot = hot[np.argsort(-strength[hot], kind="stable")]
    dropped = set()
    for h in hot:
        a, b = iu[h], ju[h]
        if a in dropped or b in dropped:
            continue
        loser = b if target_corr[a] >= target_corr[b] else a
        dropped.add(loser)
        drops.append(Removal(fm.names[alive[loser]], Reason.CORRELATED))
    return drops


def correlation_filter(fm: FeatureMatrix, corr_th: float = 0.8) -> FeatureMatrix:
    """Drop empty and constant features, then one member of each highly correlated pair.

    Pairs with ``|corr| > corr_th`` are resolved strongest first; the member
    less correlated with the target is dropped. Pairs touching an already
    dropped feature are skipped.
    """
    gone = {r.feature for r in correlation_drops(fm, corr_th)}
    return fm.keep([n for n in fm.names if n not in gone])


# --------------------------------------------------------------------------
# importance metrics
# --------------------------------------------------------------------------


def permutation_importance(model: TrainedModel, fm: FeatureMatrix, repeats: int = 10,
                           seed: int | np.random.Generator = 0) -> np.ndarray:
    """Mean RMSE increase when each column is shuffled, over ``repeats`` shuffles."""
    rng = np.random.default_rng(seed)
    X, y = fm.X, fm.y
    base = rmse(y, predict(model, X))
    scores = np.zeros(fm.n_features)
    for j in range(fm.n_features):
        deltas = []
        for _ in range(repeats):
            Xp = X.copy()
            Xp[:, j] = X[rng.permutation(X.shape[0]), j]
            deltas.append(rmse(y, predict(model, Xp)) - base)
        scores[j] = float(np.mean(deltas))
    return scores


def _strict_counts(values: np.ndarray, radius: np.ndarray) -> np.ndarray:
    """For each point, how many other points lie strictly within ``radius``."""
    s = np.sort(values)
    lo = np.searchsorted(s, values - radius, side="right")
    hi = np.searchsorted(s, values + radius, side="left")
    return hi - lo - 1


def mutual_information(x, y, k: int = 3, seed: int | np.random.Generator = 0) -> float:
    """Kraskov-Stoegbauer-Grassberger estimate (first variant) of I(x; y) in nats.

    Both variables are scaled to unit variance and jittered by ``1e-10`` to
    break ties before the k-nearest-neighbour search in the max-norm. The
    estimate is clamped at zero.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    n = x.size
    if n < k + 2:
        raise TooFewSamples(f"need at least {k + 2} samples, got {n}")
    sx, sy = x.std(), y.std()
    if not (sx > 0 and sy > 0):
        return 0.0
    rng = np.random.default_rng(seed)
    x = (x - x.mean()) / sx + MI_JITTER * rng.standard_normal(n)
    y = (y - y.mean()) / sy + MI_JITTER * rng.standard_normal(n)

    joint = np.column_stack([x, y])
    dist, _ = cKDTree(joint).query(joint, k=k + 1, p=np.inf)
    eps = dist[:, k]
    nx = _strict_counts(x, eps)
    ny = _strict_counts(y, eps)
    mi = digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1))
    return max(0.0, float(mi))


def single_feature_impact(x, y, k: int = 5) -> float:
    """Mean held-out R^2 of ``y ~ a + b x`` over contiguous folds, floored at 0."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 10:
        raise TooFewSamples(f"need at least 10 samples, got {x.size}")
    scores = []
    for train, held in contiguous_folds(x.size, k):
        xt, yt = x[train], y[train]
        xm, ym = xt.mean(), yt.mean()
        var = np.sum((xt - xm) ** 2)
        slope = np.sum((xt - xm) * (yt - ym)) / var if var > 0 else 0.0
        pred = ym + slope * (x[held] - xm)
        yh = y[held]
        sst = np.sum((yh - yh.mean()) ** 2)
        if sst > 0:
            scores.append(1.0 - np.sum((yh - pred) ** 2) / sst)
    if not scores:
        return 0.0
    return max(0.0, float(np.mean(scores)))


def vif(fm: FeatureMatrix) -> np.ndarray:
    """Variance inflation factor ``1 / (1 - R_j^2)`` of every feature.

    ``R_j^2`` comes from an OLS fit (with intercept) of feature j on all the
    others. Perfectly explained features, and every feature when there are
    not more rows than features, get ``inf``.
    """
    X = fm.X
    n, p = X.shape
    if p == 0:
        return np.array([])
    if p == 1:
        return np.array([1.0])
    if n <= p:
        return np.full(p, np.inf)
    out = np.empty(p)
    ones = np.ones((n, 1))
    for j in range(p):
        target = X[:, j]
        others = np.hstack([ones, np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        sst = np.sum((target - target.mean()) ** 2)
        if not sst > 0:
            out[j] = np.inf
            continue
        r2 = 1.0 - (resid @ resid) / sst
        out[j] = np.inf if r2 >= 1.0 - R2_INF_LIMIT else 1.0 / (1.0 - r2)
    return out


def _minmax(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if not hi > lo:
        return np.full(v.shape, 0.5)
    return (v - lo) / (hi - lo)


def combined_importance(pfi, mi, sfi) -> np.ndarray:
    """Sum of the three metrics after min-max scaling each to [0, 1].

    A metric that is equal for every feature contributes 0.5 to each.
    """
    return _minmax(pfi) + _minmax(mi) + _minmax(sfi)


# --------------------------------------------------------------------------
# lasso refinement
# --------------------------------------------------------------------------


def _lasso_path(X, y, alphas):
    """Coefficients for each alpha (descending), warm-started along the path."""
    n = X.shape[0]
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    gram = Xc.T @ Xc / n
    xty = Xc.T @ yc / n
    coefs = []
    coef = None
    for a in alphas:
        coef, _, _ = coordinate_descent(gram, xty, a, 1.0, coef=coef)
        coefs.append((coef.copy(), ym - xm @ coef))
    return coefs


def lasso_alpha_grid(fm: FeatureMatrix) -> np.ndarray:
    lmax = lambda_max(fm.X, fm.y)
    return lmax * np.logspace(np.log10(LASSO_GRID_SPAN[0]), np.log10(LASSO_GRID_SPAN[1]),
                              LASSO_GRID_SIZE)


def lasso_refine(fm: FeatureMatrix, k: int = 5) -> tuple[FeatureMatrix, list[str], float]:
    """Fit a cross-validated lasso and drop features whose coefficient is zero.

    Returns the reduced matrix, the dropped names and the chosen penalty.
    """
    if fm.n_features == 0:
        return fm, [], 0.0
    alphas = lasso_alpha_grid(fm)
    descending = alphas[::-1]
    cv = np.zeros(alphas.size)
    for train, held in contiguous_folds(fm.X.shape[0], k):
        path = _lasso_path(fm.X[train], fm.y[train], descending)
        for i, (coef, b0) in enumerate(path[::-1]):
            r = fm.y[held] - fm.X[held] @ coef - b0
            cv[i] += float(r @ r) / held.size
    best = int(np.argmin(cv))
    alpha = float(alphas[best])
    coef, _ = _lasso_path(fm.X, fm.y, descending[: alphas.size - best])[-1]
    keep = [n for n, c in zip(fm.names, coef) if abs(c) >= ZERO_COEF]
    dropped = [n for n, c in zip(fm.names, coef) if abs(c) < ZERO_COEF]
    return fm.keep(keep), dropped, alpha


# --------------------------------------------------------------------------
# the loop
# --------------------------------------------------------------------------


def score_features(fm: FeatureMatrix, rng: np.random.Generator, pfi_repeats: int = 10,
                   mi_k: int = 3) -> list[ImportanceRecord]:
    ols = fit(ModelSpec("OLS"), fm.X, fm.y, fm.names)
    pfi = permutation_importance(ols, fm, pfi_repeats, rng)
    mi = np.array([mutual_information(fm.X[:, j], fm.y, mi_k, rng) for j in range(fm.n_features)])
    sfi = np.array([single_feature_impact(fm.X[:, j], fm.y) for j in range(fm.n_features)])
    v = vif(fm)
    comb = combined_importance(pfi, mi, sfi)
    return [
        ImportanceRecord(name, float(pfi[j]), float(mi[j]), float(sfi[j]), float(v[j]), float(comb[j]))
        for j, name in enumerate(fm.names)
    ]


def iterative_feature_selection(
    fm: FeatureMatrix,
    vif_th: float = 10.0,
    corr_th: float = 0.8,
    seed: int | np.random.Generator = 0,
    pfi_repeats: int = 10,
    mi_k: int = 3,
) -> tuple[list[str], SelectionTrace]:
    """Run the full selection loop and return the surviving names and a trace."""
    rng = np.random.default_rng(seed)
    trace = SelectionTrace(initial_features=list(fm.names))
    trace.correlation_dropped = correlation_drops(fm, corr_th)
    gone = {r.feature for r in trace.correlation_dropped}
    current = fm.keep([n for n in fm.names if n not in gone])
    if current.n_features == 0:
        raise Degenerate("no features survive the correlation filter")
    scaler = standardize_fit(current.X)
    current = FeatureMatrix(current.names, standardize_apply(current.X, scaler), current.y)

    for _ in range(fm.n_features + 1):
        records = score_features(current, rng, pfi_repeats, mi_k)
        iteration = Iteration(records)
        trace.iterations.append(iteration)
        vifs = np.array([r.vif for r in records])
        if vifs.max() <= vif_th:
            break
        high = [r for r in records if r.vif > vif_th]
        lowest = min(r.combined for r in high)
        victim = next(r.feature for r in high if r.combined == lowest)
        iteration.removed.append(Removal(victim, Reason.HIGH_VIF))
        current = current.keep([n for n in current.names if n != victim])
        if current.n_features == 0:
            raise Degenerate("every feature was removed")
        current, dropped, _ = lasso_refine(current)
        iteration.removed.extend(Removal(n, Reason.ZERO_COEFFICIENT) for n in dropped)
        if current.n_features == 0:
            raise Degenerate("lasso refinement removed every feature")
    trace.final_features = list(current.names)
    return list(current.names), trace
