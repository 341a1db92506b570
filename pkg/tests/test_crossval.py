import json
import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest

from ojprofile.classifiers import MajorityBaseline
from ojprofile.evaluation import (
    EvaluationResult,
    comparison_matrix,
    cross_validate,
    fold_scores,
    make_folds,
)
from ojprofile.exceptions import ValidationError
from ojprofile.mil import MilToMl
from ojprofile.models import build_model


def test_baseline_every_fold_half(small_rushers):
    dataset, _ = small_rushers
    folds = make_folds(dataset, 10, seed=0)
    res = cross_validate(MilToMl(MajorityBaseline()), dataset, folds, name="baseline")
    assert res.fold_aucs == [0.5] * 10
    assert res.mean_auc == 0.5 and res.baseline_auc == 0.5
    assert res.relative_improvement == 0.0


def test_model_beats_baseline(small_rushers):
    dataset, _ = small_rushers
    folds = make_folds(dataset, 5, seed=0)
    res = cross_validate(build_model("rf", seed=0, n_estimators=20), dataset, folds, name="rf")
    assert res.mean_auc > 0.75
    assert res.relative_improvement == pytest.approx((res.mean_auc - 0.5) / 0.5)


def test_scaler_fitted_on_training_bags_only(small_rushers):
    dataset, _ = small_rushers
    folds = make_folds(dataset, 5, seed=0)
    _, test_idx = next(folds.split(dataset.keys))
    bags = [SimpleNamespace(X=b.X.copy()) for b in dataset.bags]
    # wildly rescale one held-out bag; the other held-out scores must not move
    bags[test_idx[0]].X *= 1000.0
    altered = SimpleNamespace(bags=bags, labels=dataset.labels, keys=dataset.keys)
    base = next(fold_scores(build_model("knn", seed=0), dataset, folds))[1]
    moved = next(fold_scores(build_model("knn", seed=0), altered, folds))[1]
    np.testing.assert_array_equal(base[1:], moved[1:])


def test_single_class_fold_excluded(small_rushers):
    dataset, _ = small_rushers
    labels = dataset.labels
    keep = list(np.flatnonzero(labels == 0)[:20]) + list(np.flatnonzero(labels == 1)[:3])
    sub = dataset.subset(keep)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        folds = make_folds(sub, 5, seed=0)
    with pytest.warns(RuntimeWarning, match="single class"):
        res = cross_validate(build_model("knn"), sub, folds, name="knn")
    assert res.fold_aucs.count(None) == 2
    assert len(res.valid_folds) == 3
    assert res.mean_auc == pytest.approx(np.mean([a for a in res.fold_aucs if a is not None]))


def test_result_round_trip(small_rushers):
    dataset, _ = small_rushers
    folds = make_folds(dataset, 5, seed=2)
    res = cross_validate(build_model("nb"), dataset, folds, name="nb")
    doc = json.loads(json.dumps(res.to_dict()))
    back = EvaluationResult.from_dict(doc)
    assert back.fold_aucs == res.fold_aucs and back.folds_id == res.folds_id
    assert back.spec["algorithm"] == "MilToMl"
    lines = res.to_csv().splitlines()
    assert lines[0] == "fold,auc,baseline_auc" and len(lines) == 7


def _result(name, aucs, folds_id="f"):
    return EvaluationResult(name, list(aucs), [0.5] * len(aucs), folds_id=folds_id)


def test_strictly_better_on_every_fold():
    good = _result("good", np.linspace(0.8, 0.9, 10))
    bad = _result("bad", np.linspace(0.6, 0.7, 10))
    m = comparison_matrix([good, bad])
    assert m.pvalues[0][1] == pytest.approx(2**-10)
    assert m.significant_95[0][1] and not m.significant_95[1][0]
    assert m.pvalues[0][0] is None and m.pvalues[1][1] is None


def test_identical_vectors_never_flagged():
    a = _result("a", [0.7] * 10)
    b = _result("b", [0.7] * 10)
    m = comparison_matrix([a, b])
    assert m.pvalues[0][1] == 1.0 and m.pvalues[1][0] == 1.0
    assert not any(any(row) for row in m.significant_90)


def test_comparison_guards():
    with pytest.raises(ValidationError):
        comparison_matrix([_result("a", [0.5] * 10)])
    with pytest.raises(ValidationError, match="fold counts"):
        comparison_matrix([_result("a", [0.5] * 10), _result("b", [0.5] * 5)])
    with pytest.raises(ValidationError, match="fold assignments"):
        comparison_matrix([_result("a", [0.5] * 10, "x"), _result("b", [0.6] * 10, "y")])


def test_excluded_folds_skipped_pairwise():
    a = _result("a", [None] + [0.9] * 9)
    b = _result("b", [0.1] + [0.5] * 9)
    p = comparison_matrix([a, b]).pvalues[0][1]
    assert p == pytest.approx(2**-9)


def test_matrix_csv_and_dict():
    m = comparison_matrix([_result("a", [0.9] * 10), _result("b", [0.5] * 10)])
    d = m.to_dict()
    assert d["names"] == ["a", "b"] and d["significant_95"][0][1]
    assert m.to_csv().splitlines()[0] == "row_beats_column,a,b"
    assert math.isclose(d["pvalues"][0][1], 2**-10)
