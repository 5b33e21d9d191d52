"""Bagged and boosted ensembles of CART regression trees."""

from __future__ import annotations

import math

import numpy as np

from .tree import DecisionTreeRegressor


class RandomForestRegressor:
    """Bootstrap-aggregated trees with ``ceil(p / 3)`` candidate features per split."""

    def __init__(self, n_estimators: int = 100, max_depth: int | None = None,
                 min_samples_leaf: int = 1, seed: int = 0):
        self.n_estimators = int(n_estimators)
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.seed = seed
        self.trees_: list[DecisionTreeRegressor] = []

    def fit(self, X, y) -> "RandomForestRegressor":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        n, p = X.shape
        rng = np.random.default_rng(self.seed)
        m = max(1, math.ceil(p / 3))
        self.trees_ = []
        for _ in range(self.n_estimators):
            sample = rng.integers(0, n, size=n)
            tree = DecisionTreeRegressor(self.max_depth, self.min_samples_leaf,
                                         max_features=m, rng=rng)
            self.trees_.append(tree.fit(X, y, sample=sample))
        return self

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return np.mean([t.predict(X) for t in self.trees_], axis=0)

    def get_state(self) -> dict:
        return {"trees": [t.get_state() for t in self.trees_]}

    def set_state(self, state: dict) -> None:
        self.trees_ = []
        for s in state["trees"]:
            tree = DecisionTreeRegressor()
            tree.set_state(s)
            self.trees_.append(tree)


class GradientBoostingRegressor:
    """Least-squares boosting: each stage fits a shallow tree to the residuals.

    The initial prediction is the training mean and every stage adds the tree
    output scaled by ``learning_rate``.
    """

    def __init__(self, n_estimators: int = 200, learning_rate: float = 0.1,
                 max_depth: int = 3, min_samples_leaf: int = 1):
        self.n_estimators = int(n_estimators)
        self.learning_rate = float(learning_rate)
        self.max_depth = int(max_depth)
        self.min_samples_leaf = int(min_samples_leaf)
        self.init_ = 0.0
        self.trees_: list[DecisionTreeRegressor] = []
        self.train_rmse_: list[float] = []

    def fit(self, X, y) -> "GradientBoostingRegressor":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        self.init_ = float(y.mean())
        pred = np.full(y.shape, self.init_)
        self.trees_ = []
        self.train_rmse_ = [float(np.sqrt(np.mean((y - pred) ** 2)))]
        for _ in range(self.n_estimators):
            tree = DecisionTreeRegressor(self.max_depth, self.min_samples_leaf)
            tree.fit(X, y - pred)
            pred = pred + self.learning_rate * tree.predict(X)
            self.trees_.append(tree)
            self.train_rmse_.append(float(np.sqrt(np.mean((y - pred) ** 2))))
        return self

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            out = out + self.learning_rate * tree.predict(X)
        return out

    def get_state(self) -> dict:
        return {"init": self.init_, "trees": [t.get_state() for t in self.trees_]}

    def set_state(self, state: dict) -> None:
        self.init_ = float(state["init"])
        self.trees_ = []
        for s in state["trees"]:
            tree = DecisionTreeRegressor()
            tree.set_state(s)
            self.trees_.append(tree)
