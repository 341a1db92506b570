from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .._validation import check_X_y
from ..exceptions import ValidationError
from .base import InstanceClassifier


class NaiveBayes(InstanceClassifier):
    """Naive Bayes with Gaussian likelihoods and Bernoulli indicator columns.

    Parameters
    ----------
    alpha : float
        Laplace smoothing for the Bernoulli columns:
        ``P(x=1 | c) = (count(x=1, c) + alpha) / (n_c + 2 * alpha)``.
    binary_features : tuple of int
        Columns modelled as Bernoulli (the assignment indicator by default).
    var_smoothing : float
        Added to every Gaussian variance, as a fraction of the largest feature
        variance, so constant columns within a class stay usable.
    """

    _state_attrs = ("class_log_prior_", "theta_", "var_", "bernoulli_p_", "gaussian_", "binary_")

    def __init__(self, alpha=1.0, binary_features=(4,), var_smoothing=1e-9):
        self.alpha = alpha
        self.binary_features = binary_features
        self.var_smoothing = var_smoothing

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        d = X.shape[1]
        binary = sorted(f for f in self.binary_features if f < d)
        gaussian = [f for f in range(d) if f not in binary]
        if binary and not np.isin(X[:, binary], (0.0, 1.0)).all():
            raise ValidationError("Bernoulli columns must hold 0/1 values")
        eps = self.var_smoothing * max(float(X[:, gaussian].var(axis=0).max()) if gaussian else 0.0, 1.0)
        self.class_log_prior_ = np.log(np.array([np.mean(y == c) for c in (0, 1)]))
        self.theta_ = np.array([X[y == c][:, gaussian].mean(axis=0) for c in (0, 1)])
        self.var_ = np.array([X[y == c][:, gaussian].var(axis=0) for c in (0, 1)]) + eps
        self.bernoulli_p_ = np.array(
            [(X[y == c][:, binary].sum(axis=0) + self.alpha) / ((y == c).sum() + 2 * self.alpha) for c in (0, 1)]
        )
        self.gaussian_ = gaussian
        self.binary_ = binary
        self._mark_fitted(X)
        return self

    def joint_log_likelihood(self, X):
        out = np.tile(self.class_log_prior_, (X.shape[0], 1))
        g = X[:, self.gaussian_]
        b = X[:, self.binary_]
        for c in (0, 1):
            out[:, c] += -0.5 * np.sum(np.log(2 * np.pi * self.var_[c]) + (g - self.theta_[c]) ** 2 / self.var_[c], axis=1)
            if self.binary_:
                p = self.bernoulli_p_[c]
                out[:, c] += np.sum(b * np.log(p) + (1 - b) * np.log1p(-p), axis=1)
        return out

    def _score(self, X):
        jll = self.joint_log_likelihood(X)
        return np.exp(jll[:, 1] - logsumexp(jll, axis=1))

    def set_state(self, state):
        super().set_state(state)
        self.gaussian_ = [int(v) for v in state["gaussian_"]]
        self.binary_ = [int(v) for v in state["binary_"]]
        return self
