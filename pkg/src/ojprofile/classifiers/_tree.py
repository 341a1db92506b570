"""Gini tree growth and flat-array traversal.

A fitted tree is a handful of parallel arrays indexed by node id; leaves have
``left == -1``. Split search and traversal are numba kernels, growth order is
decided in Python.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numba
import numpy as np

MIN_GAIN = 1e-12


@numba.njit(cache=True)
def _gini(n, pos):
    if n == 0:
        return 0.0
    p = pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


@numba.njit(cache=True)
def _best_split(X, y, idx, features):
    """Best Gini split of the samples ``idx`` over ``features``.

    Thresholds are midpoints between consecutive distinct values; the first best
    candidate in (feature order, threshold order) wins ties. Returns
    ``(feature, threshold, decrease)`` where ``decrease`` is the drop in
    sample-weighted impurity ``n * gini(parent) - nL * gini(L) - nR * gini(R)``;
    ``feature == -1`` when no split is possible.
    """
    n = idx.shape[0]
    total_pos = 0
    for i in range(n):
        total_pos += y[idx[i]]
    parent = n * _gini(n, total_pos)
    best_f = -1
    best_t = 0.0
    best_dec = 0.0
    vals = np.empty(n)
    labs = np.empty(n, dtype=np.int64)
    for fi in range(features.shape[0]):
        f = features[fi]
        for i in range(n):
            vals[i] = X[idx[i], f]
        order = np.argsort(vals, kind="mergesort")
        for i in range(n):
            labs[i] = y[idx[order[i]]]
        left_pos = 0
        for i in range(n - 1):
            left_pos += labs[i]
            a = vals[order[i]]
            b = vals[order[i + 1]]
            if not a < b:
                continue
            nl = i + 1
            nr = n - nl
            child = nl * _gini(nl, left_pos) + nr * _gini(nr, total_pos - left_pos)
            dec = parent - child
            if dec > best_dec:
                best_dec = dec
                best_f = f
                t = 0.5 * (a + b)
                if t >= b:
                    t = a
                best_t = t
    return best_f, best_t, best_dec


@numba.njit(cache=True)
def _apply_tree(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], dtype=np.int64)
    for r in range(X.shape[0]):
        node = 0
        while left[node] != -1:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@numba.njit(cache=True)
def _forest_mean(X, feature, threshold, left, right, value, roots):
    """Mean leaf value over all trees stored back to back (tree t starts at ``roots[t]``)."""
    n = X.shape[0]
    out = np.zeros(n)
    n_trees = roots.shape[0]
    for r in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = roots[t]
            node = 0
            while left[base + node] != -1:
                k = base + node
                if X[r, feature[k]] <= threshold[k]:
                    node = left[k]
                else:
                    node = right[k]
            acc += value[base + node]
        out[r] = acc / n_trees
    return out


@dataclass
class TreeArrays:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n_samples: np.ndarray
    n_positive: np.ndarray
    decrease: np.ndarray

    @property
    def value(self):
        return self.n_positive / self.n_samples

    @property
    def node_count(self):
        return self.feature.shape[0]

    @property
    def leaves(self):
        return np.flatnonzero(self.left == -1)

    def apply(self, X):
        return _apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict_value(self, X):
        return self.value[self.apply(X)]

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "n_samples": self.n_samples.tolist(),
            "n_positive": self.n_positive.tolist(),
            "decrease": self.decrease.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            n_samples=np.asarray(d["n_samples"], dtype=np.float64),
            n_positive=np.asarray(d["n_positive"], dtype=np.float64),
            decrease=np.asarray(d["decrease"], dtype=np.float64),
        )


def grow_tree(X, y, max_leaves=None, min_samples_split=2, max_features=None, rng=None):
    """Grow a Gini tree best-first.

    Each node's candidate split is computed when the node is created (so random
    feature subsets are drawn in creation order); the frontier node with the
    largest impurity decrease is split next, ties going to the older node. Growth
    stops when no split reduces impurity or ``max_leaves`` is reached.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n_features = X.shape[1]
    all_features = np.arange(n_features, dtype=np.int64)
    subsample = max_features is not None and max_features < n_features

    feature, threshold, left, right, n_samples, n_positive, decrease = [], [], [], [], [], [], []
    node_idx = []
    candidates = []

    def add_node(idx):
        nid = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        n_samples.append(idx.shape[0])
        n_positive.append(int(y[idx].sum()))
        decrease.append(0.0)
        node_idx.append(idx)
        pos = n_positive[nid]
        if idx.shape[0] < min_samples_split or pos == 0 or pos == idx.shape[0]:
            candidates.append(None)
            return nid
        if subsample:
            perm = rng.permutation(n_features).astype(np.int64)
            f, t, dec = _best_split(X, y, idx, perm[:max_features])
            if f == -1 or dec <= MIN_GAIN:
                f, t, dec = _best_split(X, y, idx, perm[max_features:])
        else:
            f, t, dec = _best_split(X, y, idx, all_features)
        candidates.append((f, t, dec) if f != -1 and dec > MIN_GAIN else None)
        return nid

    root = add_node(np.arange(X.shape[0], dtype=np.int64))
    heap = []
    if candidates[root] is not None:
        heap.append((-candidates[root][2], root))
    n_leaves = 1
    while heap and (max_leaves is None or n_leaves < max_leaves):
        _, nid = heapq.heappop(heap)
        f, t, dec = candidates[nid]
        idx = node_idx[nid]
        mask = X[idx, f] <= t
        feature[nid], threshold[nid], decrease[nid] = f, t, dec
        lid = add_node(idx[mask])
        rid = add_node(idx[~mask])
        left[nid], right[nid] = lid, rid
        n_leaves += 1
        for child in (lid, rid):
            if candidates[child] is not None:
                heapq.heappush(heap, (-candidates[child][2], child))

    return TreeArrays(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        n_samples=np.asarray(n_samples, dtype=np.float64),
        n_positive=np.asarray(n_positive, dtype=np.float64),
        decrease=np.asarray(decrease, dtype=np.float64),
    )


def stack_trees(trees):
    """Concatenate trees into flat arrays for :func:`forest_mean`."""
    sizes = [t.node_count for t in trees]
    roots = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    return (
        np.concatenate([t.feature for t in trees]),
        np.concatenate([t.threshold for t in trees]),
        np.concatenate([t.left for t in trees]),
        np.concatenate([t.right for t in trees]),
        np.concatenate([t.value for t in trees]),
        roots,
    )


def forest_mean(X, stacked):
    feature, threshold, left, right, value, roots = stacked
    return _forest_mean(np.ascontiguousarray(X, dtype=np.float64), feature, threshold, left, right, value, roots)
