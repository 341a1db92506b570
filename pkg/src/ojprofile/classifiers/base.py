from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_features, label_from_score, proba_columns


class InstanceClassifier(ClassifierMixin, BaseEstimator):
    """Shared plumbing: subclasses implement ``fit`` and ``_score``.

    ``_score`` returns the positive-class (success) probability for each row;
    ``predict`` thresholds it with ties at 0.5 going to failure.
    """

    # names of fitted attributes persisted by ``get_state``
    _state_attrs: tuple = ()

    def _score(self, X):
        raise NotImplementedError

    def _check_input(self, X):
        check_is_fitted(self, "n_features_in_")
        return check_features(X, self.n_features_in_)

    def score_samples(self, X):
        """Success probability per row, in [0, 1]."""
        return np.clip(self._score(self._check_input(X)), 0.0, 1.0)

    def predict_proba(self, X):
        return proba_columns(self.score_samples(X))

    def predict(self, X):
        return label_from_score(self.score_samples(X))

    def get_state(self):
        check_is_fitted(self, "n_features_in_")
        state = {"n_features_in_": int(self.n_features_in_)}
        for name in self._state_attrs:
            value = getattr(self, name)
            state[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return state

    def set_state(self, state):
        self.n_features_in_ = int(state["n_features_in_"])
        self.classes_ = np.array([0, 1])
        for name in self._state_attrs:
            value = state[name]
            setattr(self, name, np.asarray(value, dtype=np.float64) if isinstance(value, list) else value)
        return self

    def _mark_fitted(self, X):
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
