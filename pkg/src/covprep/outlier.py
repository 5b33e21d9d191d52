"""Global and rolling-window z-score outlier detection and replacement."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import WindowTooSmall
from .impute import linear_extrapolate, linear_interpolate

MIN_WINDOW_POINTS = 5


class Method(enum.Enum):
    GLOBAL = "Global"
    LOCAL = "Local"


class Replacement(enum.Enum):
    INTERPOLATION = "Interpolation"
    WINSORIZE = "Winsorize"


@dataclass(frozen=True)
class OutlierReport:
    column: str
    indices: tuple[int, ...]
    method: Method
    replaced_with: Replacement
    threshold: float
    window: int | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "column": self.column,
            "method": self.method.value,
            "window": self.window,
            "threshold": self.threshold,
            "indices": [int(i) for i in self.indices],
            "replaced_with": self.replaced_with.value,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "OutlierReport":
        return cls(
            column=d["column"],
            indices=tuple(d["indices"]),
            method=Method(d["method"]),
            replaced_with=Replacement(d["replaced_with"]),
            threshold=d["threshold"],
            window=d["window"],
        )


def global_zscore_outliers(series, z_th: float = 2.0) -> np.ndarray:
    """Indices whose whole-series z-score exceeds ``z_th`` in absolute value.

    Mean and (population) standard deviation are taken over the non-missing
    values. Returns an empty array when fewer than two values are present or
    the series has no spread.
    """
    x = np.asarray(series, dtype=np.float64)
    valid = ~np.isnan(x)
    if valid.sum() < 2:
        return np.array([], dtype=np.int64)
    mu = x[valid].mean()
    sigma = np.sqrt(np.mean((x[valid] - mu) ** 2))
    if not sigma > 0:
        return np.array([], dtype=np.int64)
    z = np.zeros_like(x)
    z[valid] = (x[valid] - mu) / sigma
    return np.flatnonzero(valid & (np.abs(z) > z_th))


def _windows(x: np.ndarray, window: int) -> np.ndarray:
    padded = np.concatenate([np.full(window - 1, np.nan), x])
    return sliding_window_view(padded, window)


def _window_stats(win: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise count, mean and population std of a NaN-padded window matrix."""
    valid = ~np.isnan(win)
    count = valid.sum(axis=1)
    filled = np.where(valid, win, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = filled.sum(axis=1) / count
        dev = np.where(valid, win - mu[:, None], 0.0)
        sigma = np.sqrt((dev**2).sum(axis=1) / count)
    return count, mu, sigma


def rolling_zscores(series, window: int = 30) -> np.ndarray:
    """Trailing-window z-score of every point (NaN where undefined)."""
    if window < 3:
        raise WindowTooSmall(f"window must be >= 3, got {window}")
    x = np.asarray(series, dtype=np.float64)
    count, mu, sigma = _window_stats(_windows(x, window))
    ok = (count >= MIN_WINDOW_POINTS) & (sigma > 0) & ~np.isnan(x)
    z = np.full(x.shape, np.nan)
    z[ok] = (x[ok] - mu[ok]) / sigma[ok]
    return z


def rolling_zscore_outliers(series, window: int = 30, z_th: float = 2.0) -> np.ndarray:
    """Indices flagged by a trailing rolling z-score.

    The window for point ``i`` covers ``[i - window + 1, i]``, including the
    point itself. A point needs at least five valid values in its window and
    a non-zero spread to be eligible.
    """
    z = rolling_zscores(series, window)
    with np.errstate(invalid="ignore"):
        return np.flatnonzero(np.abs(z) > z_th)


def replace_by_interpolation(series, indices, extrapolation: str = "linear") -> np.ndarray:
    """Blank the flagged points and refill them from their surviving neighbours."""
    out = np.array(series, dtype=np.float64)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        return out
    out[indices] = np.nan
    return linear_extrapolate(linear_interpolate(out), mode=extrapolation)


def winsorize_local(series, indices, window: int = 30, z_th: float = 2.0) -> np.ndarray:
    """Clamp flagged points to their trailing band ``mean +/- z_th * std``.

    Band statistics are computed from the window with every flagged point
    removed. If that leaves fewer than five values, the flagged values are
    kept in the window for that point.
    """
    if window < 3:
        raise WindowTooSmall(f"window must be >= 3, got {window}")
    x = np.array(series, dtype=np.float64)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        return x
    masked = x.copy()
    masked[indices] = np.nan
    win_clean = _windows(masked, window)[indices]
    win_all = _windows(x, window)[indices]
    n_clean, mu_clean, sd_clean = _window_stats(win_clean)
    _, mu_all, sd_all = _window_stats(win_all)
    use_clean = n_clean >= MIN_WINDOW_POINTS
    mu = np.where(use_clean, mu_clean, mu_all)
    sigma = np.where(use_clean, sd_clean, sd_all)
    lo, hi = mu - z_th * sigma, mu + z_th * sigma
    out = x.copy()
    out[indices] = np.clip(x[indices], lo, hi)
    return out
