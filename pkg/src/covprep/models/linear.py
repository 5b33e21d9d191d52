"""
Penalised least squares: OLS, ridge, lasso and elastic net.

All four minimise the same objective on centred data

    (1 / 2n) * ||y - b0 - X b||^2 + alpha * (l1_ratio * |b|_1 + (1 - l1_ratio) / 2 * |b|^2)

with the intercept ``b0`` unpenalised. OLS is ``alpha = 0``; ridge is
``l1_ratio = 0`` and is solved in closed form; lasso and elastic net use
cyclic coordinate descent over the Gram matrix.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import ConvergenceWarning, SingularSystem

CD_TOL = 1e-6
CD_MAX_SWEEPS = 10_000
OLS_JITTER = 1e-10
_COND_LIMIT = 1e15


def soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def solve_normal_equations(gram: np.ndarray, rhs: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Solve ``(gram + ridge * I) b = rhs``, adding a small jitter if singular."""
    p = gram.shape[0]
    A = gram + ridge * np.eye(p)
    cond = np.linalg.cond(A) if p else 1.0
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        A = A + OLS_JITTER * np.eye(p)
    try:
        b = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(b)):
        raise SingularSystem("normal equations produced non-finite coefficients")
    return b


def lambda_max(X: np.ndarray, y: np.ndarray, l1_ratio: float = 1.0) -> float:
    """Smallest penalty at which every lasso/elastic-net coefficient is zero."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    n = X.shape[0]
    return float(np.max(np.abs(Xc.T @ yc)) / (n * l1_ratio)) if X.shape[1] else 0.0


def coordinate_descent(
    gram: np.ndarray,
    xty: np.ndarray,
    alpha: float,
    l1_ratio: float,
    coef: np.ndarray | None = None,
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
) -> tuple[np.ndarray, bool, int]:
    """Cyclic coordinate descent on the centred, 1/n-scaled Gram system.

    ``gram`` is ``Xc.T @ Xc / n`` and ``xty`` is ``Xc.T @ yc / n``. Returns the
    coefficients, whether the max coefficient change fell below ``tol``, and
    the number of sweeps run.
    """
    p = gram.shape[0]
    b = np.zeros(p) if coef is None else np.array(coef, dtype=np.float64)
    grad = xty - gram @ b
    l1 = alpha * l1_ratio
    l2 = alpha * (1.0 - l1_ratio)
    diag = np.diag(gram)
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if diag[j] <= 0.0:
                continue
            old = b[j]
            rho = grad[j] + diag[j] * old
            new = soft_threshold(rho, l1) / (diag[j] + l2)
            if new != old:
                delta = new - old
                grad -= gram[:, j] * delta
                b[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            return b, True, sweep
    return b, False, max_sweeps


class LinearModel:
    """Shared implementation behind the four linear regressors."""

    def __init__(self, alpha: float = 0.0, l1_ratio: float = 0.0, solver: str = "auto"):
        self.alpha = float(alpha)
        self.l1_ratio = float(l1_ratio)
        self.solver = solver
        self.coef_: np.ndarray | None = None
        self.intercept_: float = 0.0
        self.converged_: bool = True
        self.n_sweeps_: int = 0

    def fit(self, X, y) -> "LinearModel":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = X.shape[0]
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        yc = y - y_mean
        gram = Xc.T @ Xc / n
        xty = Xc.T @ yc / n

        use_cd = self.solver == "cd" or (self.solver == "auto" and self.l1_ratio > 0 and self.alpha > 0)
        if use_cd:
            coef, ok, sweeps = coordinate_descent(gram, xty, self.alpha, self.l1_ratio)
            self.converged_, self.n_sweeps_ = ok, sweeps
            if not ok:
                warnings.warn(
                    f"coordinate descent stopped after {sweeps} sweeps", ConvergenceWarning
                )
        else:
            coef = solve_normal_equations(gram, xty, ridge=self.alpha * (1.0 - self.l1_ratio))
        self.coef_ = coef
        self.intercept_ = float(y_mean - x_mean @ coef)
        return self

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.coef_ + self.intercept_

    def objective(self, X, y, coef=None, intercept=None) -> float:
        coef = self.coef_ if coef is None else np.asarray(coef)
        intercept = self.intercept_ if intercept is None else intercept
        r = y - X @ coef - intercept
        pen = self.l1_ratio * np.abs(coef).sum() + 0.5 * (1 - self.l1_ratio) * (coef @ coef)
        return float(r @ r / (2 * len(y)) + self.alpha * pen)

    def get_state(self) -> dict:
        return {
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_,
            "converged": self.converged_,
        }

    def set_state(self, state: dict) -> None:
        self.coef_ = np.asarray(state["coef"], dtype=np.float64)
        self.intercept_ = float(state["intercept"])
        self.converged_ = bool(state.get("converged", True))
