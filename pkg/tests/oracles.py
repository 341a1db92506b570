"""Brute-force reference implementations used as test oracles."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def auc_double_loop(neg, pos, ties="half"):
    total = Fraction(0)
    for a in neg:
        for b in pos:
            if a < b:
                total += 1
            elif a == b and ties == "half":
                total += Fraction(1, 2)
    return float(total / (len(neg) * len(pos)))


def midranks(values):
    values = list(values)
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = Fraction(i + j + 2, 2)
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def _tail(stats, observed, center2, alternative):
    """Exact tail probability; ``stats`` and ``observed`` are doubled rank sums, ``center2`` twice their mean."""
    stats = np.asarray(stats, dtype=np.int64)
    if alternative == "greater":
        hits = int(np.count_nonzero(stats >= observed))
    elif alternative == "less":
        hits = int(np.count_nonzero(stats <= observed))
    else:
        hits = int(np.count_nonzero(np.abs(2 * stats - center2) >= abs(2 * observed - center2)))
    return min(1.0, hits / stats.size)


def _doubled(ranks):
    return np.array([int(2 * r) for r in ranks], dtype=np.int64)


def signed_rank_enumeration(a, b, alternative="two-sided"):
    """Tail probability over all 2**n sign patterns of the non-zero differences."""
    d = [x - y for x, y in zip(a, b) if x != y]
    r2 = _doubled(midranks([abs(v) for v in d]))
    observed = int(sum(r for r, v in zip(r2, d) if v > 0))
    signs = (np.arange(2 ** len(d))[:, None] >> np.arange(len(d))) & 1
    return _tail(signs @ r2, observed, int(r2.sum()), alternative)


def rank_sum_enumeration(a, b, alternative="two-sided"):
    """Tail probability over every way of choosing which pooled ranks belong to ``a``."""
    pooled = list(a) + list(b)
    r2 = _doubled(midranks(pooled))
    na, n = len(a), len(pooled)
    observed = int(r2[:na].sum())
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), na)), dtype=np.int64
    ).reshape(-1, na)
    return _tail(r2[combos].sum(axis=1), observed, 2 * na * (n + 1), alternative)


def check_folds(folds, keys, labels, k):
    """Assert the bag-aware stratification invariants; returns nothing."""
    labels = np.asarray(labels)
    assert set(folds.folds) == set(keys)
    assigned = np.array([folds.fold_of(key) for key in keys])
    assert set(assigned.tolist()) <= set(range(k))
    sizes = np.bincount(assigned, minlength=k)
    assert sizes.max() - sizes.min() <= 1
    ratio = labels.mean()
    pos = np.bincount(assigned[labels == 1], minlength=k)
    assert np.all(np.abs(pos - sizes * ratio) <= 1 + 1e-9), (pos, sizes, ratio)
    # every student's submissions on an assignment travel together
    students = {}
    for key, f in zip(keys, assigned):
        students.setdefault(key, set()).add(int(f))
    assert all(len(v) == 1 for v in students.values())
