from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyMatrix

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


def standardize_fit(X) -> ScalerParams:
    """Column means and population standard deviations of the training matrix.

    Columns whose spread is below ``1e-12`` get a std of 1 so they map to 0.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise EmptyMatrix("cannot fit a scaler on an empty matrix")
    mean = X.mean(axis=0)
    # exactly constant columns must map to exactly zero
    constant = np.all(X == X[0], axis=0)
    mean = np.where(constant, X[0], mean)
    std = X.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return ScalerParams(mean=mean, std=std)


def standardize_apply(X, params: ScalerParams) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (X - params.mean) / params.std
