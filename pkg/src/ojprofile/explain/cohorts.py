"""Cohorts from a small best-first Gini tree on raw descriptors."""

from __future__ import annotations

import csv
import io
import string
from dataclasses import dataclass

import numpy as np

from ..classifiers._tree import grow_tree
from ..evaluation.wilcoxon import wilcoxon_rank_sum
from ..exceptions import ValidationError
from ..ingest import FEATURES

OPS = ("<=", ">")


@dataclass(frozen=True)
class CohortRule:
    """Conjunction of ``(feature, op, threshold)`` predicates over raw features."""

    name: str
    predicates: tuple = ()
    features: tuple = FEATURES

    def members(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        mask = np.ones(X.shape[0], dtype=bool)
        for feat, op, thr in self.predicates:
            col = X[:, self.features.index(feat)]
            mask &= col <= thr if op == "<=" else col > thr
        return mask

    def contains(self, x):
        return bool(self.members(np.asarray(x, dtype=np.float64)[None, :])[0])

    def describe(self, digits=2):
        if not self.predicates:
            return "All"
        return " & ".join(f"{feat} {op} {thr:.{digits}f}" for feat, op, thr in self.predicates)

    def to_dict(self):
        return {"name": self.name, "rule": self.describe(), "predicates": [list(p) for p in self.predicates]}

    @classmethod
    def from_dict(cls, d, features=FEATURES):
        preds = tuple((str(f), str(op), float(t)) for f, op, t in d["predicates"])
        for f, op, _ in preds:
            if f not in features or op not in OPS:
                raise ValidationError(f"bad cohort predicate {f} {op}")
        return cls(d["name"], preds, tuple(features))


def _leaf_paths(tree, features):
    """Root-to-leaf predicate lists, left branches first."""
    out = []

    def walk(node, path):
        if tree.left[node] == -1:
            out.append(tuple(path))
            return
        f, t = features[tree.feature[node]], float(tree.threshold[node])
        walk(tree.left[node], path + [(f, "<=", t)])
        walk(tree.right[node], path + [(f, ">", t)])

    walk(0, [])
    return out


def extract_cohorts(X_raw, y, max_leaves=4, seed=0, features=FEATURES):
    """Partition instances with a best-first Gini tree of at most ``max_leaves`` leaves.

    Cohorts are named A, B, C, ... in left-to-right leaf order. Single-class data
    gives one cohort named "All". The tree is deterministic; ``seed`` is accepted
    for interface symmetry with other fitting steps.
    """
    X = np.asarray(X_raw, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if max_leaves < 1:
        raise ValidationError("max_leaves must be at least 1")
    if X.shape[0] < max_leaves:
        raise ValidationError(f"need at least {max_leaves} instances for {max_leaves} cohorts")
    if max_leaves == 1 or y.min() == y.max():
        return [CohortRule("All", (), tuple(features))]
    tree = grow_tree(X, y, max_leaves=max_leaves, rng=np.random.default_rng(seed))
    paths = _leaf_paths(tree, tuple(features))
    if len(paths) == 1:
        return [CohortRule("All", (), tuple(features))]
    return [CohortRule(string.ascii_uppercase[i], p, tuple(features)) for i, p in enumerate(paths)]


def cohort_labels(cohorts, X_raw):
    """Index of the cohort holding each row (cohorts partition the data)."""
    X = np.asarray(X_raw, dtype=np.float64)
    out = np.full(X.shape[0], -1, dtype=np.int64)
    for i, c in enumerate(cohorts):
        out[c.members(X) & (out == -1)] = i
    return out


@dataclass(frozen=True)
class CohortImpact:
    """Per-feature mean positive and negative parts of phi over a cohort's members."""

    name: str
    positive: tuple
    negative: tuple
    count: int
    features: tuple = FEATURES

    def to_dict(self):
        return {
            "name": self.name,
            "count": self.count,
            "positive": dict(zip(self.features, self.positive)),
            "negative": dict(zip(self.features, self.negative)),
        }


def cohort_impacts(cohorts, X_raw, phi):
    phi = np.asarray(phi, dtype=np.float64)
    out = []
    for c in cohorts:
        mask = c.members(X_raw)
        if not mask.any():
            raise ValidationError(f"cohort {c.name} has no members")
        p = phi[mask]
        out.append(
            CohortImpact(
                c.name,
                tuple(float(v) for v in np.maximum(p, 0).mean(axis=0)),
                tuple(float(v) for v in np.maximum(-p, 0).mean(axis=0)),
                int(mask.sum()),
                c.features,
            )
        )
    return out


@dataclass(frozen=True)
class CohortSignificance:
    name: str
    rule: str
    count: int
    success_rate: float
    p_value: float
    significant: bool


def cohort_significance(cohorts, X_raw, outcomes, alpha=0.05):
    """Two-sided rank-sum test of each cohort's outcomes against the rest of the data."""
    if len(cohorts) < 2:
        raise ValidationError("significance needs at least two cohorts")
    y = np.asarray(outcomes, dtype=np.float64)
    out = []
    for c in cohorts:
        mask = c.members(X_raw)
        if mask.all():
            raise ValidationError(f"cohort {c.name} covers the whole dataset")
        if not mask.any():
            raise ValidationError(f"cohort {c.name} has no members")
        p = wilcoxon_rank_sum(y[mask], y[~mask])
        out.append(CohortSignificance(c.name, c.describe(), int(mask.sum()), float(y[mask].mean()), p, p < alpha))
    return out


def cohorts_csv(cohorts, X_raw, y, impacts=None, significance=None):
    """One row per cohort: rule, size, success rate, and optionally p-value and impacts."""
    X = np.asarray(X_raw, dtype=np.float64)
    y = np.asarray(y)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["cohort", "rule", "count", "success_rate"]
    if significance is not None:
        header += ["p_value", "significant"]
    if impacts is not None:
        header += [f"{s}_{f}" for f in cohorts[0].features for s in ("pos", "neg")]
    w.writerow(header)
    for i, c in enumerate(cohorts):
        mask = c.members(X)
        row = [c.name, c.describe(), int(mask.sum()), repr(float(y[mask].mean())) if mask.any() else ""]
        if significance is not None:
            row += [repr(significance[i].p_value), int(significance[i].significant)]
        if impacts is not None:
            for pos, neg in zip(impacts[i].positive, impacts[i].negative):
                row += [repr(pos), repr(neg)]
        w.writerow(row)
    return buf.getvalue()
