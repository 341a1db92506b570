"""Instance-level classifiers sharing one contract: fit on descriptor rows, score success."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..exceptions import UnknownNameError
from .base import InstanceClassifier
from .baseline import MajorityBaseline
from .knn import KNearestNeighbors
from .logistic import LogisticRegression
from .naive_bayes import NaiveBayes
from .tree import DecisionTree, RandomForest

ALGORITHMS = {
    "majority_baseline": MajorityBaseline,
    "naive_bayes": NaiveBayes,
    "logistic_regression": LogisticRegression,
    "knn": KNearestNeighbors,
    "decision_tree": DecisionTree,
    "random_forest": RandomForest,
}

# hyperparameter grids evaluated for the course data
GRIDS = {
    "knn": {"n_neighbors": [1, 3, 5, 7, 9, 11]},
    "random_forest": {"n_estimators": [50, 100, 200, 300, 400, 500]},
}

_SEEDED = ("random_forest", "decision_tree")


@dataclass(frozen=True)
class ClassifierSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def build(self):
        return make_classifier(self.algorithm, seed=self.seed, **self.hyperparameters)


def make_classifier(algorithm, seed=0, **hyperparameters):
    try:
        cls = ALGORITHMS[algorithm]
    except KeyError:
        raise UnknownNameError(f"unknown classifier {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    if algorithm in _SEEDED and "random_state" not in hyperparameters:
        hyperparameters["random_state"] = seed
    return cls(**hyperparameters)


def grid_specs(algorithm, seed=0):
    """One spec per grid point (a single default spec for algorithms without a grid)."""
    grid = GRIDS.get(algorithm)
    if not grid:
        return [ClassifierSpec(algorithm, {}, seed)]
    (name, values), = grid.items()
    return [ClassifierSpec(algorithm, {name: v}, seed) for v in values]


__all__ = [
    "ALGORITHMS",
    "GRIDS",
    "ClassifierSpec",
    "DecisionTree",
    "InstanceClassifier",
    "KNearestNeighbors",
    "LogisticRegression",
    "MajorityBaseline",
    "NaiveBayes",
    "RandomForest",
    "grid_specs",
    "make_classifier",
]
