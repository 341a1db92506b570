from __future__ import annotations

import numpy as np

from ..exceptions import ValidationError


def pair_counts(scores_negative, scores_positive):
    """Count (negative, positive) pairs with the positive scored strictly higher, and tied pairs."""
    neg = np.sort(np.asarray(scores_negative, dtype=np.float64))
    pos = np.asarray(scores_positive, dtype=np.float64)
    below = np.searchsorted(neg, pos, side="left")
    upto = np.searchsorted(neg, pos, side="right")
    return int(below.sum()), int((upto - below).sum())


def auc(scores_negative, scores_positive, ties="half"):
    """Pairwise AUC: fraction of (negative, positive) pairs ranked correctly.

    ``ties="strict"`` counts only ``f(neg) < f(pos)``; ``ties="half"`` adds half a
    pair for every tie, which puts a constant scorer at exactly 0.5.
    """
    n0, n1 = len(scores_negative), len(scores_positive)
    if n0 == 0 or n1 == 0:
        raise ValidationError("AUC needs at least one negative and one positive score")
    less, tied = pair_counts(scores_negative, scores_positive)
    if ties == "strict":
        return less / (n0 * n1)
    if ties == "half":
        return (less + 0.5 * tied) / (n0 * n1)
    raise ValidationError(f"unknown tie mode {ties!r}")


def auc_from_labels(y_true, scores, ties="half"):
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    return auc(scores[y_true == 0], scores[y_true == 1], ties=ties)
