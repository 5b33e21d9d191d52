"""
CART regression trees.

Splits maximise the reduction in squared error; candidate thresholds are the
midpoints between consecutive distinct sorted values of a feature. The split
search and tree growth run in a numba kernel; trees are stored as flat arrays
so they serialize to plain lists.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _best_split(X, y, sample, start, end, feats, min_leaf):
    n = end - start
    total = 0.0
    for i in range(start, end):
        total += y[sample[i]]
    best_score = -np.inf
    best_f = -1
    best_thr = 0.0
    vals = np.empty(n)
    ys = np.empty(n)
    for f in feats:
        for i in range(n):
            vals[i] = X[sample[start + i], f]
        order = np.argsort(vals, kind="mergesort")
        for i in range(n):
            ys[i] = y[sample[start + order[i]]]
        cum = 0.0
        for i in range(n - 1):
            cum += ys[i]
            n_left = i + 1
            n_right = n - n_left
            if n_right < min_leaf:
                break
            if n_left < min_leaf:
                continue
            lo = vals[order[i]]
            hi = vals[order[i + 1]]
            if not lo < hi:
                continue
            right = total - cum
            score = cum * cum / n_left + right * right / n_right
            if score > best_score:
                best_score = score
                best_f = f
                thr = 0.5 * (lo + hi)
                if thr >= hi:
                    thr = lo
                best_thr = thr
    return best_f, best_thr, best_score - total * total / n


@njit(cache=True)
def _grow(X, y, sample, max_depth, min_leaf, n_feats, keys):
    p = X.shape[1]
    cap = 2 * sample.size + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = sample.size
    stack_depth[0] = 0
    top = 1
    n_nodes = 1
    buf = np.empty(sample.size, dtype=np.int64)
    all_feats = np.arange(p)

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        m = end - start
        s = 0.0
        lo_y = np.inf
        hi_y = -np.inf
        for i in range(start, end):
            v = y[sample[i]]
            s += v
            if v < lo_y:
                lo_y = v
            if v > hi_y:
                hi_y = v
        value[node] = s / m
        count[node] = m
        if (max_depth >= 0 and depth >= max_depth) or m < 2 * min_leaf or lo_y == hi_y:
            continue
        if n_feats < p:
            feats = np.sort(np.argsort(keys[node])[:n_feats])
        else:
            feats = all_feats
        f, thr, gain = _best_split(X, y, sample, start, end, feats, min_leaf)
        if f < 0:
            continue
        # stable partition of sample[start:end]
        nl = 0
        nr = 0
        for i in range(start, end):
            idx = sample[i]
            if X[idx, f] <= thr:
                sample[start + nl] = idx
                nl += 1
            else:
                buf[nr] = idx
                nr += 1
        for i in range(nr):
            sample[start + nl + i] = buf[i]
        feature[node] = f
        threshold[node] = thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left subtree is numbered first
        stack_node[top] = n_nodes + 1
        stack_start[top] = start + nl
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = n_nodes
        stack_start[top] = start
        stack_end[top] = start + nl
        stack_depth[top] = depth + 1
        top += 1
        n_nodes += 2
    return (
        feature[:n_nodes],
        threshold[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        value[:n_nodes],
        count[:n_nodes],
    )


@njit(cache=True)
def _predict(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def best_split(X, y, min_samples_leaf: int = 1):
    """Root split chosen by the tree builder: ``(feature, threshold, gain)``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    sample = np.arange(X.shape[0], dtype=np.int64)
    feats = np.arange(X.shape[1], dtype=np.int64)
    return _best_split(X, y, sample, 0, X.shape[0], feats, min_samples_leaf)


class DecisionTreeRegressor:
    def __init__(self, max_depth: int | None = None, min_samples_leaf: int = 1,
                 max_features: int | None = None, rng: np.random.Generator | None = None):
        self.max_depth = max_depth
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_features = max_features
        self.rng = rng
        self.tree_: dict | None = None

    def fit(self, X, y, sample=None) -> "DecisionTreeRegressor":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if sample is None:
            sample = np.arange(X.shape[0], dtype=np.int64)
        sample = np.array(sample, dtype=np.int64)
        p = X.shape[1]
        n_feats = p if self.max_features is None else min(p, int(self.max_features))
        if n_feats < p:
            keys = self.rng.random((2 * sample.size + 1, p))
        else:
            keys = np.zeros((1, p))
        depth = -1 if self.max_depth is None else int(self.max_depth)
        arrays = _grow(X, y, sample, depth, self.min_samples_leaf, n_feats, keys)
        self.tree_ = dict(zip(("feature", "threshold", "left", "right", "value", "count"), arrays))
        return self

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        t = self.tree_
        return _predict(X, t["feature"], t["threshold"], t["left"], t["right"], t["value"])

    @property
    def node_count(self) -> int:
        return int(self.tree_["feature"].size)

    def get_state(self) -> dict:
        t = self.tree_
        return {k: t[k].tolist() for k in ("feature", "threshold", "left", "right", "value")}

    def set_state(self, state: dict) -> None:
        self.tree_ = {
            "feature": np.asarray(state["feature"], dtype=np.int64),
            "threshold": np.asarray(state["threshold"], dtype=np.float64),
            "left": np.asarray(state["left"], dtype=np.int64),
            "right": np.asarray(state["right"], dtype=np.int64),
            "value": np.asarray(state["value"], dtype=np.float64),
        }
