from __future__ import annotations

import math

import numpy as np

from .._validation import check_X_y
from ._tree import TreeArrays, forest_mean, grow_tree, stack_trees
from .base import InstanceClassifier


def _resolve_max_features(max_features, n_features):
    if max_features is None:
        return None
    if max_features == "sqrt":
        return math.ceil(math.sqrt(n_features))
    return int(max_features)


class DecisionTree(InstanceClassifier):
    """Gini decision tree; the score is the positive fraction of the reached leaf.

    Grown best-first on impurity decrease with midpoint thresholds, until nodes are
    pure, hold fewer than ``min_samples_split`` samples, admit no impurity-reducing
    split, or ``max_leaves`` leaves exist. No pruning.
    """

    def __init__(self, max_leaves=None, min_samples_split=2, max_features=None, random_state=None):
        self.max_leaves = max_leaves
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        rng = np.random.default_rng(self.random_state)
        self.tree_ = grow_tree(
            X,
            y,
            max_leaves=self.max_leaves,
            min_samples_split=self.min_samples_split,
            max_features=_resolve_max_features(self.max_features, X.shape[1]),
            rng=rng,
        )
        self._mark_fitted(X)
        return self

    def apply(self, X):
        return self.tree_.apply(self._check_input(X))

    def _score(self, X):
        return self.tree_.predict_value(X)

    def get_state(self):
        return {**super().get_state(), "tree": self.tree_.to_dict()}

    def set_state(self, state):
        super().set_state(state)
        self.tree_ = TreeArrays.from_dict(state["tree"])
        return self


class RandomForest(InstanceClassifier):
    """Bagged Gini trees with a random feature subset per split.

    The score is the mean over trees of the reached leaf's positive fraction. Tree
    ``t`` draws its bootstrap and feature subsets from the ``t``-th child of
    ``SeedSequence(random_state)``.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", bootstrap=True, min_samples_split=2, random_state=0):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.min_samples_split = min_samples_split
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        n = X.shape[0]
        max_features = _resolve_max_features(self.max_features, X.shape[1])
        trees = []
        for child in np.random.SeedSequence(self.random_state).spawn(self.n_estimators):
            rng = np.random.default_rng(child)
            if self.bootstrap:
                idx = rng.integers(0, n, n)
                Xb, yb = X[idx], y[idx]
            else:
                Xb, yb = X, y
            trees.append(grow_tree(Xb, yb, min_samples_split=self.min_samples_split, max_features=max_features, rng=rng))
        self._set_trees(trees)
        self._mark_fitted(X)
        return self

    def _set_trees(self, trees):
        self.estimators_ = trees
        self._stacked = stack_trees(trees)

    def _score(self, X):
        return forest_mean(X, self._stacked)

    def get_state(self):
        return {**super().get_state(), "trees": [t.to_dict() for t in self.estimators_]}

    def set_state(self, state):
        super().set_state(state)
        self._set_trees([TreeArrays.from_dict(d) for d in state["trees"]])
        return self
