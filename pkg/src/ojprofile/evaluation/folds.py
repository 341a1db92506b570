from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..exceptions import ValidationError


@dataclass(frozen=True)
class FoldAssignment:
    """Bag-level fold membership: every bag (and so every submission of a student
    on an assignment) sits in exactly one fold."""

    fold_count: int
    folds: dict
    seed: int

    def fold_of(self, key):
        return self.folds[key]

    def split(self, keys):
        """Yield ``(train_idx, test_idx)`` index arrays over ``keys`` per fold, in fold order."""
        assigned = np.array([self.folds[k] for k in keys])
        for f in range(self.fold_count):
            yield np.flatnonzero(assigned != f), np.flatnonzero(assigned == f)

    def sizes(self):
        return np.bincount(list(self.folds.values()), minlength=self.fold_count)

    def to_dict(self):
        return {
            "fold_count": self.fold_count,
            "seed": self.seed,
            "folds": [[list(k), f] for k, f in sorted(self.folds.items())],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["fold_count"]), {tuple(k): int(f) for k, f in d["folds"]}, int(d["seed"]))


def make_folds(dataset, k=10, seed=0):
    """Stratified bag-level fold assignment.

    Positive and negative bags are shuffled with ``seed`` and the folds put in a
    random order. Positives are dealt round-robin in that order; the first
    ``N mod k`` folds of the order get one extra bag, which the negatives fill.
    Fold sizes then differ by at most one bag, and so do positive counts. Folds
    that received an extra positive bag are also the ones that get extra size
    whenever possible, which keeps every fold's positive count within one bag of
    its size times the global positive ratio.
    """
    keys = list(dataset.keys)
    labels = dataset.labels
    n = len(keys)
    if n < k:
        raise ValidationError(f"{n} bags cannot fill {k} folds")
    n_pos = int(labels.sum())
    if min(n_pos, n - n_pos) < k:
        warnings.warn(f"minority class has fewer than {k} bags; some folds will lack it", RuntimeWarning)
    rng = np.random.default_rng(seed)
    pos = rng.permutation(np.flatnonzero(labels == 1))
    neg = rng.permutation(np.flatnonzero(labels == 0))
    order = rng.permutation(k)

    target = np.full(k, n // k)
    target[order[: n % k]] += 1
    assignment = {}
    filled = np.zeros(k, dtype=np.int64)
    for i, b in enumerate(pos):
        f = int(order[i % k])
        assignment[keys[b]] = f
        filled[f] += 1
    it = iter(neg)
    for f in order:
        for _ in range(int(target[f] - filled[f])):
            assignment[keys[next(it)]] = int(f)
    return FoldAssignment(k, assignment, seed)
