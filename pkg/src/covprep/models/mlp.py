"""
Fully connected regression network trained with mini-batch momentum SGD.

Hidden layers use ReLU, the output is linear and the loss is half the mean
squared error. The target is standardised internally with the training mean
and std so one learning-rate grid works for targets of any magnitude;
predictions are mapped back to the original units. Training stops early when
the RMSE on a chronological hold-out (the last 10% of the training rows)
fails to improve by ``tol`` for ``patience`` consecutive epochs, and the best
weights seen are restored.
"""

from __future__ import annotations

import numpy as np


class MLPRegressor:
    def __init__(self, hidden_layers=(64,), learning_rate: float = 1e-3, batch_size: int = 32,
                 max_epochs: int = 500, momentum: float = 0.9, patience: int = 20,
                 tol: float = 1e-4, validation_fraction: float = 0.1, seed: int = 0):
        self.hidden_layers = tuple(int(h) for h in hidden_layers)
        self.learning_rate = float(learning_rate)
        self.batch_size = int(batch_size)
        self.max_epochs = int(max_epochs)
        self.momentum = float(momentum)
        self.patience = int(patience)
        self.tol = float(tol)
        self.validation_fraction = float(validation_fraction)
        self.seed = seed
        self.weights_: list[np.ndarray] = []
        self.biases_: list[np.ndarray] = []
        self.y_mean_ = 0.0
        self.y_std_ = 1.0
        self.n_epochs_ = 0
        self.best_val_rmse_ = np.inf

    def init_params(self, n_features: int, rng: np.random.Generator) -> None:
        sizes = (n_features, *self.hidden_layers, 1)
        self.weights_, self.biases_ = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights_.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases_.append(np.zeros(fan_out))

    def _forward(self, X):
        acts = [X]
        h = X
        last = len(self.weights_) - 1
        for i, (W, b) in enumerate(zip(self.weights_, self.biases_)):
            z = h @ W + b
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return acts

    def loss_and_gradients(self, X, y_scaled):
        """Half-MSE loss on the internal target scale and its gradients."""
        acts = self._forward(X)
        n = X.shape[0]
        err = acts[-1][:, 0] - y_scaled
        loss = 0.5 * float(err @ err) / n
        delta = (err / n)[:, None]
        grad_w = [None] * len(self.weights_)
        grad_b = [None] * len(self.weights_)
        for i in range(len(self.weights_) - 1, -1, -1):
            grad_w[i] = acts[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights_[i].T) * (acts[i] > 0)
        return loss, grad_w, grad_b

    def _predict_scaled(self, X) -> np.ndarray:
        return self._forward(X)[-1][:, 0]

    def fit(self, X, y) -> "MLPRegressor":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        rng = np.random.default_rng(self.seed)
        self.y_mean_ = float(y.mean())
        std = float(y.std())
        self.y_std_ = std if std > 1e-12 else 1.0
        ys = (y - self.y_mean_) / self.y_std_
        self.init_params(X.shape[1], rng)

        n = X.shape[0]
        n_val = int(round(n * self.validation_fraction)) if n >= 10 else 0
        X_tr, y_tr = X[: n - n_val], ys[: n - n_val]
        X_val, y_val = X[n - n_val :], ys[n - n_val :]

        vel_w = [np.zeros_like(W) for W in self.weights_]
        vel_b = [np.zeros_like(b) for b in self.biases_]
        best = np.inf
        best_params = None
        wait = 0
        self.n_epochs_ = 0
        for epoch in range(self.max_epochs):
            order = rng.permutation(X_tr.shape[0])
            for lo in range(0, order.size, self.batch_size):
                idx = order[lo : lo + self.batch_size]
                _, gw, gb = self.loss_and_gradients(X_tr[idx], y_tr[idx])
                for i in range(len(self.weights_)):
                    vel_w[i] = self.momentum * vel_w[i] - self.learning_rate * gw[i]
                    vel_b[i] = self.momentum * vel_b[i] - self.learning_rate * gb[i]
                    self.weights_[i] += vel_w[i]
                    self.biases_[i] += vel_b[i]
            self.n_epochs_ = epoch + 1
            if n_val == 0:
                continue
            val = float(np.sqrt(np.mean((self._predict_scaled(X_val) - y_val) ** 2)))
            if not np.isfinite(val):
                break
            if val < best - self.tol:
                best = val
                best_params = ([W.copy() for W in self.weights_], [b.copy() for b in self.biases_])
                wait = 0
            else:
                wait += 1
                if wait >= self.patience:
                    break
        if best_params is not None:
            self.weights_, self.biases_ = best_params
        self.best_val_rmse_ = best
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self._predict_scaled(X) * self.y_std_ + self.y_mean_

    def get_state(self) -> dict:
        return {
            "weights": [W.tolist() for W in self.weights_],
            "biases": [b.tolist() for b in self.biases_],
            "y_mean": self.y_mean_,
            "y_std": self.y_std_,
        }

    def set_state(self, state: dict) -> None:
        self.weights_ = [np.asarray(W, dtype=np.float64) for W in state["weights"]]
        self.biases_ = [np.asarray(b, dtype=np.float64) for b in state["biases"]]
        self.y_mean_ = float(state["y_mean"])
        self.y_std_ = float(state["y_std"])
