from __future__ import annotations

import numpy as np

from .._validation import check_X_y
from .base import InstanceClassifier


def squared_distances(A, B):
    """All-pairs squared Euclidean distances, accumulated coordinate by coordinate."""
    d2 = np.zeros((A.shape[0], B.shape[0]))
    for j in range(A.shape[1]):
        diff = A[:, j][:, None] - B[:, j][None, :]
        d2 += diff * diff
    return d2


class KNearestNeighbors(InstanceClassifier):
    """k-NN vote fraction; equal distances are ordered by training index."""

    _state_attrs = ("X_fit_", "y_fit_")

    def __init__(self, n_neighbors=5, chunk_size=2048):
        self.n_neighbors = n_neighbors
        self.chunk_size = chunk_size

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.X_fit_ = X
        self.y_fit_ = y.astype(np.float64)
        self._mark_fitted(X)
        return self

    def kneighbors(self, X):
        k = min(self.n_neighbors, self.X_fit_.shape[0])
        out = []
        for start in range(0, X.shape[0], self.chunk_size):
            d2 = squared_distances(X[start : start + self.chunk_size], self.X_fit_)
            out.append(np.argsort(d2, axis=1, kind="stable")[:, :k])
        return np.vstack(out)

    def _score(self, X):
        return self.y_fit_[self.kneighbors(X)].mean(axis=1)

    def set_state(self, state):
        super().set_state(state)
        self.X_fit_ = np.asarray(self.X_fit_, dtype=np.float64).reshape(-1, self.n_features_in_)
        return self
