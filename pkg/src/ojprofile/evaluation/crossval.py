"""Bag-aware cross-validation and pairwise model comparison."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import clone

from ..classifiers import MajorityBaseline
from ..exceptions import ValidationError
from ..ingest import DescriptorScaler
from ..mil import MilToMl
from ..models import as_bag_model
from .metrics import auc
from .wilcoxon import wilcoxon_signed_rank

RESULT_FORMAT = "ojprofile.evaluation"
MATRIX_FORMAT = "ojprofile.comparison"
SCHEMA_VERSION = 1


def folds_fingerprint(folds):
    text = json.dumps(folds.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _describe(model):
    from ..persistence import model_to_dict

    doc = model_to_dict(model, fitted=False)
    return {"algorithm": doc["algorithm"], "params": doc["params"]}


@dataclass
class EvaluationResult:
    """Per-fold bag AUCs of one model; ``None`` marks an excluded single-class fold."""

    name: str
    fold_aucs: list
    baseline_fold_aucs: list
    spec: dict = field(default_factory=dict)
    ties: str = "half"
    folds_id: str = ""

    @property
    def fold_count(self):
        return len(self.fold_aucs)

    @property
    def valid_folds(self):
        return [i for i, a in enumerate(self.fold_aucs) if a is not None]

    @property
    def mean_auc(self):
        vals = [a for a in self.fold_aucs if a is not None]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def baseline_auc(self):
        vals = [a for a in self.baseline_fold_aucs if a is not None]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def relative_improvement(self):
        base = self.baseline_auc
        if not base > 0:
            return math.nan
        return (self.mean_auc - base) / base

    def to_dict(self):
        def num(x):
            return None if x is None or math.isnan(x) else x

        return {
            "format": RESULT_FORMAT,
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "spec": self.spec,
            "ties": self.ties,
            "folds_id": self.folds_id,
            "fold_count": self.fold_count,
            "fold_aucs": self.fold_aucs,
            "baseline_fold_aucs": self.baseline_fold_aucs,
            "mean_auc": num(self.mean_auc),
            "baseline_auc": num(self.baseline_auc),
            "relative_improvement": num(self.relative_improvement),
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != RESULT_FORMAT:
            raise ValidationError("not an evaluation result document")
        return cls(
            name=d["name"],
            fold_aucs=list(d["fold_aucs"]),
            baseline_fold_aucs=list(d["baseline_fold_aucs"]),
            spec=d.get("spec", {}),
            ties=d.get("ties", "half"),
            folds_id=d.get("folds_id", ""),
        )

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "auc", "baseline_auc"])
        for i, (a, b) in enumerate(zip(self.fold_aucs, self.baseline_fold_aucs)):
            w.writerow([i, "" if a is None else repr(a), "" if b is None else repr(b)])
        w.writerow(["mean", repr(self.mean_auc), repr(self.baseline_auc)])
        return buf.getvalue()


def fold_scores(model, dataset, folds, normalization="zscore"):
    """Held-out bag scores per fold.

    Yields ``(test_idx, scores)``. Normalization and the model are fitted on the
    training bags only; the held-out bags are touched only for scoring.
    """
    model = as_bag_model(model)
    bags = dataset.bags
    labels = dataset.labels
    for train_idx, test_idx in folds.split(dataset.keys):
        train_X = [bags[i].X for i in train_idx]
        scaler = DescriptorScaler(normalization).fit(np.vstack(train_X))
        fitted = clone(model).fit([scaler.transform(X) for X in train_X], labels[train_idx])
        scores = fitted.score_bags([scaler.transform(bags[i].X) for i in test_idx])
        yield test_idx, scores


def _fold_aucs(model, dataset, folds, normalization, ties, label):
    labels = dataset.labels
    out = []
    for f, (test_idx, scores) in enumerate(fold_scores(model, dataset, folds, normalization)):
        y = labels[test_idx]
        if y.min() == y.max():
            warnings.warn(f"{label}: fold {f} holds a single class and is excluded", RuntimeWarning)
            out.append(None)
            continue
        out.append(float(auc(scores[y == 0], scores[y == 1], ties=ties)))
    return out


def cross_validate(model, dataset, folds, name=None, normalization="zscore", ties="half", baseline=True):
    """Bag-level AUC per fold for ``model`` and for the majority baseline on the same folds."""
    model = as_bag_model(model)
    name = name or type(model).__name__
    aucs = _fold_aucs(model, dataset, folds, normalization, ties, name)
    base = (
        _fold_aucs(MilToMl(MajorityBaseline()), dataset, folds, normalization, ties, "baseline")
        if baseline
        else [None] * len(aucs)
    )
    return EvaluationResult(name, aucs, base, _describe(model), ties, folds_fingerprint(folds))


@dataclass
class ComparisonMatrix:
    """One-sided signed-rank p-values: ``pvalues[i][j]`` tests whether row ``i`` beats column ``j``."""

    names: list
    pvalues: list

    def flags(self, alpha):
        n = len(self.names)
        return [[self.pvalues[i][j] is not None and self.pvalues[i][j] < alpha for j in range(n)] for i in range(n)]

    @property
    def significant_90(self):
        return self.flags(0.10)

    @property
    def significant_95(self):
        return self.flags(0.05)

    def to_dict(self):
        return {
            "format": MATRIX_FORMAT,
            "schema_version": SCHEMA_VERSION,
            "names": self.names,
            "pvalues": self.pvalues,
            "significant_90": self.significant_90,
            "significant_95": self.significant_95,
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row_beats_column"] + list(self.names))
        for name, row in zip(self.names, self.pvalues):
            w.writerow([name] + ["" if p is None else repr(p) for p in row])
        return buf.getvalue()


def _paired_p(a, b):
    keep = [i for i in range(len(a)) if a[i] is not None and b[i] is not None]
    x = np.array([a[i] for i in keep], dtype=np.float64)
    z = np.array([b[i] for i in keep], dtype=np.float64)
    if x.size == 0 or np.all(x == z):
        return 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return wilcoxon_signed_rank(x, z, alternative="greater")


def comparison_matrix(results):
    """Pairwise one-sided signed-rank tests over per-fold AUCs (diagonal left empty)."""
    if len(results) < 2:
        raise ValidationError("comparison needs at least two results")
    counts = {r.fold_count for r in results}
    if len(counts) != 1:
        raise ValidationError(f"results have mismatched fold counts {sorted(counts)}")
    ids = {r.folds_id for r in results if r.folds_id}
    if len(ids) > 1:
        raise ValidationError("results were computed on different fold assignments")
    n = len(results)
    p = [[None if i == j else _paired_p(results[i].fold_aucs, results[j].fold_aucs) for j in range(n)] for i in range(n)]
    return ComparisonMatrix([r.name for r in results], p)
