"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import SingleClassError, ValidationError


def check_features(X, n_features=None):
    """Return ``X`` as a finite 2-D float64 array, optionally checking its width."""
    X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)
    if n_features is not None and X.shape[1] != n_features:
        raise ValidationError(
            f"dimension mismatch: model was fitted on {n_features} features, got {X.shape[1]}"
        )
    return X


def check_binary_labels(y, n_samples, require_both=True):
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_samples:
        raise ValidationError(f"expected {n_samples} labels, got shape {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be binary (0 = failure, 1 = success)")
    y = y.astype(np.int64)
    if require_both and np.unique(y).size < 2:
        raise SingleClassError("training data contains a single class")
    return y


def check_X_y(X, y, require_both=True):
    X = check_features(X)
    return X, check_binary_labels(y, X.shape[0], require_both=require_both)


def check_bags(bags, n_features=None):
    """Validate a sequence of bags (2-D instance arrays); returns a list of arrays."""
    if len(bags) == 0:
        raise ValidationError("no bags given")
    out = []
    for i, bag in enumerate(bags):
        X = getattr(bag, "X", bag)
        X = check_array(X, dtype=np.float64, ensure_2d=True, ensure_min_samples=0)
        if X.shape[0] == 0:
            raise ValidationError(f"bag {i} is empty")
        if n_features is not None and X.shape[1] != n_features:
            raise ValidationError(
                f"dimension mismatch: model was fitted on {n_features} features, "
                f"bag {i} has {X.shape[1]}"
            )
        out.append(X)
    width = out[0].shape[1]
    if any(b.shape[1] != width for b in out):
        raise ValidationError("bags have inconsistent feature counts")
    return out


def proba_columns(score):
    """Stack positive-class scores into an (n, 2) ``predict_proba`` matrix."""
    score = np.asarray(score, dtype=np.float64)
    return np.column_stack([1.0 - score, score])


def label_from_score(score):
    """Success iff score > 0.5; an exact 0.5 resolves to failure (at-risk)."""
    return (np.asarray(score) > 0.5).astype(np.int64)
