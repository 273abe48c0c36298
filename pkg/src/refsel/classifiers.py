"""Minimal deterministic classifiers used to score selected feature subsets.

Hyperparameters are frozen so results are reproducible: Gaussian NB smooths
variances by 1e-9 times the largest overall feature variance; logistic
regression is full-batch gradient descent (L2 strength 1.0 on the weights,
learning rate 0.1, at most 1000 iterations); kNN uses k=5 and Euclidean
distance. All expose ``predict_scores`` returning the minority-class score
per row.
"""

from __future__ import annotations

import logging

import numpy as np

from .exceptions import DataError, ShapeError

logger = logging.getLogger(__name__)


def _check_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ShapeError("X must be 2-D with one label per row")
    classes = np.unique(y)
    if len(classes) < 2:
        raise DataError("training data must contain both classes")
    return X, y.astype(np.int64)


class GaussianNB:
    """Gaussian naive Bayes with frequency priors."""

    def __init__(self, var_smoothing_factor: float = 1e-9):
        self.var_smoothing_factor = var_smoothing_factor

    def fit(self, X, y):
        X, y = _check_training_data(X, y)
        smoothing = self.var_smoothing_factor * float(np.max(np.var(X, axis=0)))
        self.means_ = []
        self.vars_ = []
        self.log_priors_ = []
        for c in (0, 1):
            rows = X[y == c]
            self.means_.append(rows.mean(axis=0))
            # Floor keeps the density finite when every variance is zero.
            self.vars_.append(np.maximum(rows.var(axis=0) + smoothing, 1e-300))
            self.log_priors_.append(np.log(len(rows) / len(y)))
        return self

    def _joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=np.float64)
        jll = np.empty((X.shape[0], 2))
        for c in (0, 1):
            diff = X - self.means_[c]
            log_density = -0.5 * (
                np.log(2.0 * np.pi * self.vars_[c]) + diff**2 / self.vars_[c]
            ).sum(axis=1)
            jll[:, c] = self.log_priors_[c] + log_density
        return jll

    def predict_scores(self, X) -> np.ndarray:
        """Posterior probability of the minority class per row."""
        jll = self._joint_log_likelihood(X)
        # Softmax over the two classes, stabilised by the row max.
        m = jll.max(axis=1, keepdims=True)
        p = np.exp(jll - m)
        return p[:, 1] / p.sum(axis=1)


def logistic_loss_grad(w, b, X, y, l2: float):
    """Mean log-loss with L2 penalty on w only, and its gradients.

    loss = mean_i log(1 + exp(-sign_i * (X w + b))) + l2 * ||w||^2 / (2n)
    with sign_i = +-1 for y_i = 1/0.
    """
    n = X.shape[0]
    z = X @ w + b
    sign = 2.0 * y - 1.0
    loss = float(np.mean(np.logaddexp(0.0, -sign * z)) + l2 * (w @ w) / (2.0 * n))
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    residual = p - y
    grad_w = X.T @ residual / n + l2 * w / n
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


class LogisticRegression:
    """Binary logistic regression fit by full-batch gradient descent."""

    def __init__(self, l2: float = 1.0, learning_rate: float = 0.1,
                 max_iter: int = 1000, tol: float = 1e-8):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        X, y = _check_training_data(X, y)
        yf = y.astype(np.float64)
        w = np.zeros(X.shape[1])
        b = 0.0
        converged = False
        for _ in range(self.max_iter):
            _, grad_w, grad_b = logistic_loss_grad(w, b, X, yf, self.l2)
            if max(np.max(np.abs(grad_w), initial=0.0), abs(grad_b)) < self.tol:
                converged = True
                break
            w -= self.learning_rate * grad_w
            b -= self.learning_rate * grad_b
        if not converged:
            logger.warning(
                "logistic regression did not converge within %d iterations", self.max_iter
            )
        self.coef_ = w
        self.intercept_ = b
        return self

    def predict_scores(self, X) -> np.ndarray:
        z = np.asarray(X, dtype=np.float64) @ self.coef_ + self.intercept_
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


class KNeighbors:
    """k-nearest-neighbour scorer: fraction of minority rows among the k nearest.

    Distance ties resolve to the lower training-row index; k is clamped to
    the training-set size.
    """

    def __init__(self, k: int = 5):
        if k < 1:
            raise DataError("k must be positive")
        self.k = k

    def fit(self, X, y):
        X, y = _check_training_data(X, y)
        self.X_ = X
        self.y_ = y
        self._train_sq = np.sum(X**2, axis=1)
        return self

    def predict_scores(self, X, chunk: int = 512) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        k = min(self.k, len(self.y_))
        scores = np.empty(X.shape[0])
        for start in range(0, X.shape[0], chunk):
            block = X[start : start + chunk]
            d2 = (
                np.sum(block**2, axis=1)[:, None]
                - 2.0 * block @ self.X_.T
                + self._train_sq[None, :]
            )
            order = np.argsort(d2, axis=1, kind="stable")[:, :k]
            scores[start : start + chunk] = self.y_[order].mean(axis=1)
        return scores
