"""Short model names shared by the CLI and the evaluation helpers.

Every name resolves to a bag-level learner. Instance classifiers are wrapped in
:class:`~ojprofile.mil.MilToMl` so that they train on instances and predict bags
by maximum confidence.
"""

from __future__ import annotations

from .classifiers import ALGORITHMS, InstanceClassifier, make_classifier
from .exceptions import UnknownNameError
from .mil import MIL_ALGORITHMS, BagClassifier, MilToMl, make_mil_classifier

ALIASES = {
    "baseline": "majority_baseline",
    "nb": "naive_bayes",
    "logreg": "logistic_regression",
    "knn": "knn",
    "dt": "decision_tree",
    "rf": "random_forest",
    "citation_knn": "citation_knn",
    "apr": "apr",
    "em_dd": "em_dd",
    "mean_rf": "mean_repr_rf",
    "mean_logreg": "mean_repr_logreg",
}

MODEL_NAMES = tuple(ALIASES)


def canonical_name(name):
    full = ALIASES.get(name, name)
    if full not in ALGORITHMS and full not in MIL_ALGORITHMS:
        raise UnknownNameError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    return full


def build_model(name, seed=0, **hyperparameters):
    """Bag-level learner for a short or full algorithm name."""
    full = canonical_name(name)
    if full in ALGORITHMS:
        return MilToMl(make_classifier(full, seed=seed, **hyperparameters))
    return make_mil_classifier(full, seed=seed, **hyperparameters)


def as_bag_model(model):
    """Accept a bag learner, an instance classifier, a spec or a name."""
    if isinstance(model, BagClassifier):
        return model
    if isinstance(model, InstanceClassifier):
        return MilToMl(model)
    if isinstance(model, str):
        return build_model(model)
    if hasattr(model, "build"):
        return as_bag_model(model.build())
    raise UnknownNameError(f"cannot use {type(model).__name__} as a model")
