"""Error metrics shared by model search, feature selection and evaluation."""

from __future__ import annotations

import numpy as np

from .errors import LengthMismatch, TooFewSamples, ZeroVariance


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64).ravel()
    y_hat = np.asarray(y_hat, dtype=np.float64).ravel()
    if y.size != y_hat.size:
        raise LengthMismatch(f"lengths differ: {y.size} vs {y_hat.size}")
    return y, y_hat


def rmse(y, y_hat) -> float:
    y, y_hat = _pair(y, y_hat)
    if y.size == 0:
        raise TooFewSamples("rmse of an empty vector")
    d = y - y_hat
    return float(np.sqrt(np.mean(d * d)))


def r2(y, y_hat) -> float:
    """``1 - SSE / SST`` with SST taken about the mean of ``y``."""
    y, y_hat = _pair(y, y_hat)
    if y.size < 2:
        raise TooFewSamples("r2 needs at least two values")
    sst = float(np.sum((y - y.mean()) ** 2))
    if not sst > 0:
        raise ZeroVariance("r2 is undefined for a constant target")
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / sst


def rmse_variance(rmse_train: float, rmse_val: float, rmse_test: float) -> float:
    """Population variance (n = 3) of the train, validation and test RMSE."""
    # sorted so the floating-point result does not depend on argument order
    values = np.sort(np.array([rmse_train, rmse_val, rmse_test], dtype=np.float64))
    if np.any(values < 0):
        raise ValueError("RMSE values must be non-negative")
    return float(np.mean((values - values.mean()) ** 2))
