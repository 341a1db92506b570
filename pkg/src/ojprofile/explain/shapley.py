"""Exact interventional Shapley values over the descriptor space.

The value of a coalition ``S`` for instance ``x`` is the mean model score over
background rows ``b`` of the hybrid row taking ``x`` on ``S`` and ``b``
elsewhere. With five features all 32 coalitions are enumerated.

Tree models have a faster exact route: for one (instance, background row) pair,
walking a tree while tracking which features must come from ``x`` and which
from ``b`` to reach each leaf turns every reachable leaf into a unanimity-style
game whose Shapley values have a closed form.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numba
import numpy as np

from ..classifiers import DecisionTree, InstanceClassifier, RandomForest
from ..classifiers._tree import stack_trees
from ..exceptions import UnknownNameError, ValidationError
from ..ingest import FEATURES
from ..mil import BagClassifier, MilToMl

# hybrid rows evaluated per batch by the generic path
BATCH_ROWS = 200_000


def coalition_masks(d):
    """Boolean ``(2**d, d)`` matrix; row ``s`` has feature ``j`` set iff bit ``j`` of ``s`` is."""
    s = np.arange(2**d)[:, None]
    return ((s >> np.arange(d)) & 1).astype(bool)


def shapley_weights(d):
    """``w[k] = k! (d-1-k)! / d!``, the weight of a coalition of size ``k`` excluding the feature."""
    return np.array([math.factorial(k) * math.factorial(d - 1 - k) / math.factorial(d) for k in range(d)])


def coalition_values(score_fn, x, background):
    """``v[s]`` for every coalition bitmask ``s``."""
    x = np.asarray(x, dtype=np.float64)
    B = _check_background(background, x.shape[0])
    masks = coalition_masks(x.shape[0])
    hybrid = np.where(masks[:, None, :], x[None, None, :], B[None, :, :])
    scores = np.asarray(score_fn(hybrid.reshape(-1, x.shape[0])), dtype=np.float64)
    return scores.reshape(len(masks), len(B)).mean(axis=1)


def _phi_from_values(v, d):
    """Shapley values from coalition values ``v[..., 2**d]`` as weighted explicit differences.

    A feature whose addition never changes ``v`` gets exactly zero.
    """
    w = shapley_weights(d)
    sizes = np.array([bin(s).count("1") for s in range(2**d)])
    phi = np.zeros(v.shape[:-1] + (d,))
    for i in range(d):
        bit = 1 << i
        without = np.array([s for s in range(2**d) if not s & bit])
        diffs = v[..., without | bit] - v[..., without]
        phi[..., i] = diffs @ w[sizes[without]]
    return phi


@dataclass(frozen=True)
class Attribution:
    """Shapley values of one instance; ``base_value + phi.sum()`` reproduces ``score``."""

    phi: np.ndarray
    base_value: float
    score: float
    features: tuple = FEATURES

    def top_factors(self, k=3):
        """The ``k`` largest contributions by magnitude, ties in feature order."""
        order = sorted(range(len(self.phi)), key=lambda j: (-abs(self.phi[j]), j))
        return [(self.features[j], float(self.phi[j])) for j in order[:k]]

    def to_dict(self):
        return {
            "base_value": self.base_value,
            "score": self.score,
            "phi": {f: float(p) for f, p in zip(self.features, self.phi)},
        }


def shapley(score_fn, x, background, features=FEATURES):
    """Exact Shapley attribution of ``score_fn`` at ``x`` against ``background``."""
    x = np.asarray(x, dtype=np.float64).ravel()
    v = coalition_values(score_fn, x, background)
    return Attribution(_phi_from_values(v, x.shape[0]), float(v[0]), float(v[-1]), tuple(features))


def shapley_permutations(score_fn, x, background):
    """Shapley values by averaging marginal contributions over all feature orderings."""
    from itertools import permutations

    x = np.asarray(x, dtype=np.float64).ravel()
    d = x.shape[0]
    v = coalition_values(score_fn, x, background)
    phi = np.zeros(d)
    count = 0
    for perm in permutations(range(d)):
        s = 0
        for j in perm:
            phi[j] += v[s | (1 << j)] - v[s]
            s |= 1 << j
        count += 1
    return phi / count


def _check_background(background, d):
    B = np.asarray(background, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] == 0:
        raise ValidationError("Shapley needs a non-empty background set")
    if B.shape[1] != d:
        raise ValidationError(f"background has {B.shape[1]} features, instance has {d}")
    return B


def sample_background(X, size=100, seed=0):
    """Up to ``size`` rows of ``X`` drawn without replacement (all rows if fewer), in original order."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] <= size:
        return X.copy()
    rng = np.random.default_rng(seed)
    return X[np.sort(rng.choice(X.shape[0], size, replace=False))]


# -- tree fast path -------------------------------------------------------------------


def _leaf_coefficients(d):
    """``cpos[a, n] = (a-1)! n! / (a+n)!`` and ``cneg[a, n] = a! (n-1)! / (a+n)!``."""
    cpos = np.zeros((d + 1, d + 1))
    cneg = np.zeros((d + 1, d + 1))
    f = math.factorial
    for a in range(d + 1):
        for n in range(d + 1 - a):
            if a:
                cpos[a, n] = f(a - 1) * f(n) / f(a + n)
            if n:
                cneg[a, n] = f(a) * f(n - 1) / f(a + n)
    return cpos, cneg


@numba.njit(cache=True)
def _forest_shap(X, B, feature, threshold, left, right, value, roots, cpos, cneg, stack_size):
    n, d = X.shape
    m = B.shape[0]
    n_trees = roots.shape[0]
    phi = np.zeros((n, d))
    st_node = np.empty(stack_size, dtype=np.int64)
    st_a = np.empty(stack_size, dtype=np.int64)
    st_n = np.empty(stack_size, dtype=np.int64)
    for r in range(n):
        for q in range(m):
            for t in range(n_trees):
                base = roots[t]
                sp = 0
                st_node[0] = 0
                st_a[0] = 0
                st_n[0] = 0
                sp = 1
                while sp > 0:
                    sp -= 1
                    node = st_node[sp]
                    A = st_a[sp]
                    N = st_n[sp]
                    k = base + node
                    if left[k] == -1:
                        a = 0
                        nb = 0
                        for j in range(d):
                            a += (A >> j) & 1
                            nb += (N >> j) & 1
                        v = value[k]
                        if a > 0:
                            cp = v * cpos[a, nb]
                            for j in range(d):
                                if (A >> j) & 1:
                                    phi[r, j] += cp
                        if nb > 0:
                            cn = v * cneg[a, nb]
                            for j in range(d):
                                if (N >> j) & 1:
                                    phi[r, j] -= cn
                        continue
                    f = feature[k]
                    bit = np.int64(1) << f
                    x_left = X[r, f] <= threshold[k]
                    b_left = B[q, f] <= threshold[k]
                    x_child = left[k] if x_left else right[k]
                    b_child = left[k] if b_left else right[k]
                    if x_left == b_left or (A & bit) != 0:
                        st_node[sp] = x_child
                        st_a[sp] = A
                        st_n[sp] = N
                        sp += 1
                    elif (N & bit) != 0:
                        st_node[sp] = b_child
                        st_a[sp] = A
                        st_n[sp] = N
                        sp += 1
                    else:
                        st_node[sp] = x_child
                        st_a[sp] = A | bit
                        st_n[sp] = N
                        st_node[sp + 1] = b_child
                        st_a[sp + 1] = A
                        st_n[sp + 1] = N | bit
                        sp += 2
    return phi / (m * n_trees)


def _tree_list(model):
    if isinstance(model, RandomForest):
        return model.estimators_
    if isinstance(model, DecisionTree):
        return [model.tree_]
    return None


def tree_shapley_values(model, X, background):
    """Exact Shapley values for a fitted :class:`DecisionTree` or :class:`RandomForest`."""
    trees = _tree_list(model)
    if trees is None:
        raise ValidationError(f"{type(model).__name__} is not a tree model")
    X = np.ascontiguousarray(X, dtype=np.float64)
    B = np.ascontiguousarray(_check_background(background, X.shape[1]))
    feature, threshold, left, right, value, roots = stack_trees(trees)
    cpos, cneg = _leaf_coefficients(X.shape[1])
    # each pop pushes at most two entries, so the stack never outgrows depth + 2
    stack_size = max(t.node_count for t in trees) + 2
    phi = _forest_shap(X, B, feature, threshold, left, right, value, roots, cpos, cneg, stack_size)
    base = float(np.mean(model.score_samples(B)))
    return phi, base


# -- batch interface -----------------------------------------------------------------


def instance_model(model):
    """The instance-level scorer behind ``model`` (unwrapping the max-confidence mapping)."""
    if isinstance(model, MilToMl):
        return model.estimator_
    return model


def score_function(model):
    """Row-wise success score of ``model``; bag learners score each row as a one-instance bag."""
    model = instance_model(model)
    if isinstance(model, InstanceClassifier):
        return model.score_samples
    if isinstance(model, BagClassifier):
        return lambda X: model.score_bags([row[None, :] for row in np.asarray(X)])
    if callable(model):
        return model
    raise UnknownNameError(f"cannot score with {type(model).__name__}")


def shapley_values(model, X, background, method="auto"):
    """Shapley values for every row of ``X``.

    Returns ``(phi, base_value)`` with ``phi`` of shape ``(n, d)``. ``method`` is
    ``"tree"``, ``"enumerate"`` or ``"auto"`` (tree path for tree models).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    d = X.shape[1]
    B = _check_background(background, d)
    inner = instance_model(model)
    if method not in ("auto", "tree", "enumerate"):
        raise UnknownNameError(f"unknown Shapley method {method!r}")
    if method == "tree" or (method == "auto" and _tree_list(inner) is not None):
        return tree_shapley_values(inner, X, B)
    score = score_function(model)
    masks = coalition_masks(d)
    per_row = len(masks) * len(B)
    chunk = max(1, BATCH_ROWS // per_row)
    v = np.empty((X.shape[0], len(masks)))
    for start in range(0, X.shape[0], chunk):
        xs = X[start : start + chunk]
        hybrid = np.where(masks[None, :, None, :], xs[:, None, None, :], B[None, None, :, :])
        s = np.asarray(score(hybrid.reshape(-1, d)), dtype=np.float64)
        v[start : start + len(xs)] = s.reshape(len(xs), len(masks), len(B)).mean(axis=2)
    base = float(np.mean(v[:, 0])) if len(v) else float(np.mean(score(B)))
    return _phi_from_values(v, d), base


# -- summaries -------------------------------------------------------------------------


@dataclass
class Explanation:
    """Shapley values for a set of instances plus what is needed to plot them.

    ``X_raw`` holds the unstandardized descriptors, ``labels`` the ground truth.
    """

    phi: np.ndarray
    base_value: float
    scores: np.ndarray
    X_raw: np.ndarray
    labels: np.ndarray
    features: tuple = FEATURES

    def attribution(self, i):
        return Attribution(self.phi[i], self.base_value, float(self.scores[i]), self.features)

    def importance(self):
        return importance_from_phi(self.phi, self.features)

    def dependence(self, feature):
        return dependence_rows(self, feature)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "label", "score", "base_value"] + [f"phi_{f}" for f in self.features])
        for i in range(len(self.phi)):
            w.writerow([i, int(self.labels[i]), repr(float(self.scores[i])), repr(self.base_value)]
                       + [repr(float(p)) for p in self.phi[i]])
        return buf.getvalue()


def importance_from_phi(phi, features=FEATURES):
    """Features ranked by mean |phi|, largest first (ties keep feature order)."""
    phi = np.asarray(phi, dtype=np.float64)
    mean_abs = np.abs(phi).mean(axis=0) if len(phi) else np.zeros(len(features))
    order = sorted(range(len(features)), key=lambda j: (-mean_abs[j], j))
    return [(features[j], float(mean_abs[j])) for j in order]


def explain(model, X_std, X_raw, labels, background, method="auto"):
    """Shapley values of every instance. ``X_std`` is what the model sees."""
    phi, base = shapley_values(model, X_std, background, method=method)
    scores = np.asarray(score_function(model)(X_std), dtype=np.float64)
    return Explanation(phi, base, scores, np.asarray(X_raw, dtype=np.float64), np.asarray(labels))


def global_importance(model, X, background, features=FEATURES):
    phi, _ = shapley_values(model, X, background)
    return importance_from_phi(phi, features)


def dependence_rows(explanation, feature):
    """``(raw value, phi, label)`` per instance for one feature."""
    try:
        j = list(explanation.features).index(feature)
    except ValueError:
        raise UnknownNameError(f"unknown feature {feature!r}") from None
    return [
        (float(explanation.X_raw[i, j]), float(explanation.phi[i, j]), int(explanation.labels[i]))
        for i in range(len(explanation.phi))
    ]


def dependence_export(model, X_std, X_raw, labels, feature, background):
    return dependence_rows(explain(model, X_std, X_raw, labels, background), feature)


def dependence_csv(rows, feature):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([feature, "phi", "label"])
    for value, p, lab in rows:
        w.writerow([repr(value), repr(p), lab])
    return buf.getvalue()
