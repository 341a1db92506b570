"""Versioned JSON documents for fitted models.

A document records the estimator class, its constructor parameters and its fitted
state. Nested estimators (the inner classifier of a bag learner) are stored as
nested documents.
"""

from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator

from . import classifiers, mil
from .exceptions import ValidationError
from .ingest import DescriptorScaler, NormalizationStats

MODEL_FORMAT = "ojprofile.model"
SCHEMA_VERSION = 1

_CLASSES = {
    cls.__name__: cls
    for cls in (
        classifiers.MajorityBaseline,
        classifiers.NaiveBayes,
        classifiers.LogisticRegression,
        classifiers.KNearestNeighbors,
        classifiers.DecisionTree,
        classifiers.RandomForest,
        mil.MilToMl,
        mil.CitationKNN,
        mil.APR,
        mil.EMDD,
        mil.MeanBagClassifier,
        DescriptorScaler,
    )
}


def _encode_param(value):
    if isinstance(value, BaseEstimator):
        return {"__estimator__": model_to_dict(value, fitted=False)}
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


def _decode_param(value):
    if isinstance(value, dict) and "__estimator__" in value:
        return model_from_dict(value["__estimator__"])
    return value


def _state(est):
    if isinstance(est, DescriptorScaler):
        return {"stats": est.stats_.to_dict()}
    return est.get_state()


def model_to_dict(est, fitted=True):
    name = type(est).__name__
    if name not in _CLASSES:
        raise ValidationError(f"cannot serialize {name}")
    doc = {
        "format": MODEL_FORMAT,
        "schema_version": SCHEMA_VERSION,
        "algorithm": name,
        "params": {k: _encode_param(v) for k, v in sorted(est.get_params(deep=False).items())},
    }
    if fitted:
        doc["state"] = _state(est)
    return doc


def model_from_dict(doc):
    if doc.get("format") != MODEL_FORMAT:
        raise ValidationError("not a model document")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported model schema version {doc.get('schema_version')}")
    try:
        cls = _CLASSES[doc["algorithm"]]
    except KeyError:
        raise ValidationError(f"unknown model class {doc.get('algorithm')!r}") from None
    est = cls(**{k: _decode_param(v) for k, v in doc["params"].items()})
    if "state" in doc:
        if cls is DescriptorScaler:
            est = DescriptorScaler.from_stats(NormalizationStats.from_dict(doc["state"]["stats"]))
        else:
            est.set_state(doc["state"])
    return est


def dumps(obj):
    """Canonical JSON text: sorted keys, compact separators, newline-terminated."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def save_model(est, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model_to_dict(est)))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
