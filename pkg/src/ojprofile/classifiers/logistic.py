from __future__ import annotations

import warnings

import numpy as np
from scipy.special import expit

from .._validation import check_X_y
from .base import InstanceClassifier


def _log_loss(X1, y, theta):
    z = X1 @ theta
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


class LogisticRegression(InstanceClassifier):
    """Unregularized logistic regression fitted by batch gradient descent.

    Each iteration backtracks (Armijo rule, halving) from twice the previously
    accepted step. Training stops once the largest parameter change falls below
    ``tol``.
    """

    _state_attrs = ("coef_", "intercept_", "n_iter_")

    def __init__(self, tol=1e-4, max_iter=10000):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        X1 = np.column_stack([X, np.ones(X.shape[0])])
        yf = y.astype(np.float64)
        theta = np.zeros(X1.shape[1])
        loss = _log_loss(X1, yf, theta)
        step = 1.0
        converged = False
        for it in range(1, self.max_iter + 1):
            grad = X1.T @ (expit(X1 @ theta) - yf) / X1.shape[0]
            gnorm2 = float(grad @ grad)
            step = min(2.0 * step, 1e6)
            while True:
                candidate = theta - step * grad
                new_loss = _log_loss(X1, yf, candidate)
                if new_loss <= loss - 1e-4 * step * gnorm2 or step < 1e-12:
                    break
                step *= 0.5
            change = np.max(np.abs(candidate - theta))
            theta, loss = candidate, new_loss
            if change < self.tol:
                converged = True
                break
        if not converged:
            warnings.warn(f"logistic regression did not converge in {self.max_iter} iterations", RuntimeWarning)
        self.coef_ = theta[:-1]
        self.intercept_ = float(theta[-1])
        self.n_iter_ = it
        self.training_loss_ = loss
        self._mark_fitted(X)
        return self

    def decision_function(self, X):
        return self._check_input(X) @ self.coef_ + self.intercept_

    def _score(self, X):
        return expit(X @ self.coef_ + self.intercept_)
