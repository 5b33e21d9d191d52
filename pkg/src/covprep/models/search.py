"""Chronological k-fold cross-validation over a hyperparameter grid."""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from ..errors import TooFewRows
from ..metrics import rmse


def contiguous_folds(n: int, k: int = 5) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split ``range(n)`` into ``k`` contiguous blocks, in time order.

    Returns ``(train_idx, held_out_idx)`` pairs; block sizes differ by at most one.
    """
    if n < k:
        raise TooFewRows(f"need at least {k} rows for {k} folds, got {n}")
    blocks = np.array_split(np.arange(n), k)
    return [
        (np.concatenate([b for j, b in enumerate(blocks) if j != i]), blocks[i])
        for i in range(k)
    ]


def kfold_grid_search(specs: Sequence, X, y, k: int = 5, seed: int | None = None):
    """Pick the grid point with the lowest mean out-of-fold RMSE.

    Ties go to the earlier grid point. Returns ``(best_spec, table)`` where
    ``table`` has one row per grid point with the per-fold and mean RMSE.
    """
    from . import fit, predict

    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    folds = contiguous_folds(X.shape[0], k)
    if seed is not None:
        specs = [dataclasses.replace(s, seed=seed) for s in specs]
    table = []
    best, best_score = None, np.inf
    for spec in specs:
        scores = []
        for train, held in folds:
            model = fit(spec, X[train], y[train])
            scores.append(rmse(y[held], predict(model, X[held])))
        mean = float(np.mean(scores))
        table.append({**spec.to_dict(), "fold_rmse": scores, "mean_rmse": mean})
        if mean < best_score:
            best, best_score = spec, mean
    if best is None:
        best = specs[0]
    return best, table
