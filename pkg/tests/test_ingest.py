from __future__ import annotations

import math
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ojprofile import ingest
from ojprofile.exceptions import ConfigError, DeadlineError, DegenerateFeatureError, LogParseError, ValidationError

from .conftest import log_text


def test_empty_log_is_empty(configs):
    assert ingest.parse_log(log_text([]), configs) == []
    assert ingest.parse_log("", configs) == []


def test_single_row(configs):
    recs = ingest.parse_log(log_text([("s1", "A1", "2020-03-18T12:00:00Z", "test_error", 1)]), configs)
    assert len(recs) == 1
    assert recs[0].verdict == "test_error"
    assert recs[0].passed_assignment is True


def test_inconsistent_passed_flag_names_row(configs):
    text = log_text([("s1", "A1", "2020-03-18T12:00:00Z", "test_error", 1), ("s1", "A1", "2020-03-19T12:00:00Z", "success", 0)])
    with pytest.raises(LogParseError, match="row 2"):
        ingest.parse_log(text, configs)


@pytest.mark.parametrize(
    "row, message",
    [
        (("s1", "A1", "2020-03-18T12:00:00Z", "accepted", 1), "unknown verdict"),
        (("s1", "A1", "yesterday", "success", 1), "unparseable timestamp"),
        (("s1", "A3", "2020-03-18T12:00:00Z", "success", 1), "no config"),
        (("s1", "A1", "2020-03-18T12:00:00Z", "success", 2), "passed_assignment"),
    ],
)
def test_row_errors(configs, row, message):
    with pytest.raises(LogParseError, match=message):
        ingest.parse_log(log_text([row]), configs)


def test_after_deadline_rejected(configs):
    with pytest.raises(DeadlineError, match="row 1"):
        ingest.parse_log(log_text([("s1", "A1", "2020-03-21T00:00:01Z", "success", 1)]), configs)
    # exactly at the deadline is still allowed
    assert len(ingest.parse_log(log_text([("s1", "A1", "2020-03-21T00:00:00Z", "success", 1)]), configs)) == 1


def test_bad_header(configs):
    with pytest.raises(LogParseError, match="header"):
        ingest.parse_log("student,assignment\n", configs)


def test_records_sorted(configs):
    rows = [
        ("s2", "A1", "2020-03-10T00:00:00Z", "success", 1),
        ("s1", "A2", "2020-05-10T00:00:00Z", "success", 1),
        ("s1", "A1", "2020-03-12T00:00:00Z", "success", 0),
        ("s1", "A1", "2020-03-11T00:00:00Z", "test_error", 0),
    ]
    recs = ingest.parse_log(log_text(rows), configs)
    keys = [(r.student_id, r.assignment_id, r.submitted_at) for r in recs]
    assert keys == sorted(keys)
    assert len(recs) == 4


def test_days_to_deadline(configs):
    recs = ingest.parse_log(log_text([("s1", "A1", "2020-03-18T12:00:00Z", "test_error", 1)]), configs)
    (v,) = ingest.extract_features(recs, configs)
    assert v.days_to_deadline == 2.5
    assert v.first_submission_days_to_deadline == 2.5
    assert v.submissions_to_date == 1
    assert v.submission_days_to_date == 1
    assert v.assignment == 0


def test_counts_three_submissions_two_dates(configs):
    rows = [
        ("s1", "A2", "2020-05-10T08:00:00Z", "compile_error", 0),
        ("s1", "A2", "2020-05-10T23:59:59Z", "test_error", 0),
        ("s1", "A2", "2020-05-12T00:00:00Z", "time_error", 0),
    ]
    vs = ingest.extract_features(ingest.parse_log(log_text(rows), configs), configs)
    assert [v.submissions_to_date for v in vs] == [1, 2, 3]
    assert [v.submission_days_to_date for v in vs] == [1, 1, 2]
    assert all(v.assignment == 1 for v in vs)
    assert all(v.first_submission_days_to_deadline == vs[0].days_to_deadline for v in vs)


_T0 = ingest.parse_timestamp("2020-03-01T00:00:00Z")


def _vectors(values):
    """Feature vectors whose four real features all equal ``values`` (shifted per feature)."""
    out = []
    for i, x in enumerate(values):
        out.append(
            ingest.FeatureVector("s", "A1", _T0 + timedelta(hours=i), "success", x, x + 1, x + 2, x + 3, i % 2, 1)
        )
    return out


def test_normalization_two_points():
    stats = ingest.fit_normalization(_vectors([2.0, 4.0]))
    assert stats.mean[0] == 3.0
    assert stats.scale[0] == 1.0


def test_normalization_population_sd():
    stats = ingest.fit_normalization(_vectors([1.0, 2.0, 3.0]))
    assert stats.mean[0] == pytest.approx(2.0)
    assert stats.scale[0] == pytest.approx(math.sqrt(2 / 3), abs=1e-15)


def test_degenerate_feature_named():
    vs = _vectors([1.0, 2.0])
    vs = [ingest.FeatureVector("s", "A1", None, "success", 5.0, v.first_submission_days_to_deadline, v.submissions_to_date,
                               v.submission_days_to_date, 0, 1) for v in vs]
    with pytest.raises(DegenerateFeatureError, match="days_to_deadline"):
        ingest.fit_normalization(vs)


def test_normalization_needs_two():
    with pytest.raises(ValidationError):
        ingest.fit_normalization(_vectors([1.0]))


@pytest.mark.parametrize("x, expected", [(3.0, 0.0), (4.0, 1.0), (2.5, -0.5)])
def test_apply_normalization(x, expected):
    stats = ingest.fit_normalization(_vectors([2.0, 4.0]))
    v = ingest.FeatureVector("s", "A1", None, "success", x, 0.0, 0.0, 0.0, 1, 0)
    z = ingest.apply_normalization(stats, v)
    assert z.days_to_deadline == expected
    assert z.assignment == 1 and z.success == 0


def test_minmax_option():
    stats = ingest.fit_normalization(_vectors([2.0, 4.0, 6.0]), method="minmax")
    assert stats.mean[0] == 2.0 and stats.scale[0] == 4.0
    X = stats.transform(np.array([[6.0, 0, 0, 0, 1]]))
    assert X[0, 0] == 1.0 and X[0, 4] == 1.0


def test_scaler_estimator_api(rng):
    X = rng.normal(size=(50, 5))
    X[:, 4] = rng.integers(0, 2, 50)
    sc = ingest.DescriptorScaler().fit(X)
    Z = sc.transform(X)
    np.testing.assert_allclose(Z[:, :4].mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(Z[:, :4].std(axis=0), 1, atol=1e-12)
    np.testing.assert_array_equal(Z[:, 4], X[:, 4])
    np.testing.assert_allclose(sc.inverse_transform(Z), X, atol=1e-12)
    assert sc.get_params() == {"method": "zscore"}


def test_build_bags_examples(configs):
    base = configs[0].deadline
    rows = [("s1", "A1", ingest.format_timestamp(base - timedelta(days=d)), "test_error", 1) for d in (5, 4, 3, 2, 1)]
    ds = ingest.load_dataset(log_text(rows), configs)
    assert len(ds) == 1 and len(ds.bags[0]) == 5 and ds.bags[0].label == 1

    rows = [
        ("s1", "A1", "2020-03-10T00:00:00Z", "success", 1),
        ("s2", "A1", "2020-03-10T00:00:00Z", "test_error", 0),
        ("s2", "A2", "2020-05-10T00:00:00Z", "success", 1),
    ]
    ds = ingest.load_dataset(log_text(rows), configs)
    assert ds.keys == [("s1", "A1"), ("s2", "A1"), ("s2", "A2")]
    assert ds.labels.tolist() == [1, 0, 1]


def test_build_bags_rejects_mixed_labels():
    vs = _vectors([1.0, 2.0])
    vs[1] = ingest.FeatureVector("s", "A1", _T0, "success", 2.0, 3.0, 4.0, 5.0, 0, 0)
    with pytest.raises(AssertionError):
        ingest.build_bags(vs)


def test_dataset_rejects_duplicate_keys(configs):
    ds = ingest.load_dataset(log_text([("s1", "A1", "2020-03-10T00:00:00Z", "success", 1)]), configs)
    with pytest.raises(ValidationError):
        ingest.Dataset(ds.bags + ds.bags)


def test_summary_example(configs):
    d = configs[0].deadline
    ts = [ingest.format_timestamp(d - timedelta(days=k)) for k in (9, 8, 7, 6, 5)]
    rows = [("p", "A1", t, v, 1) for t, v in zip(ts, ["test_error", "compile_error", "success", "success", "success"])]
    rows += [("f", "A1", ts[0], "test_error", 0), ("f", "A1", ts[1], "memory_error", 0)]
    (row,) = ingest.summarize(ingest.load_dataset(log_text(rows), configs))
    assert (row.students_total, row.students_success, row.students_failure) == (2, 1, 1)
    assert row.attempts_total == 7
    assert row.attempts_until_success == 3.0
    assert row.avg_submissions_success == 5.0 and row.avg_submissions_failure == 2.0
    assert row.attempts_success_pct == pytest.approx(300 / 7)
    assert row.year == "2019-20"
    header = ingest.summary_to_csv([row]).splitlines()[0].split(",")
    assert header == list(ingest.SUMMARY_COLUMNS)


def test_summary_empty():
    assert ingest.summarize(ingest.Dataset([])) == []


def test_config_roundtrip(configs):
    text = ingest.dump_configs(configs)
    assert ingest.load_configs(text) == configs
    single = "assignment = A1\ndeadline = 2020-03-21T00:00:00Z\nopen_date = 2020-03-01T00:00:00Z\n"
    (cfg,) = ingest.load_configs(single)
    assert cfg.time_limit_s == 10 and cfg.memory_limit_mb == 100


@pytest.mark.parametrize(
    "text",
    [
        "[A1]\ndeadline = 2020-03-21T00:00:00Z\n",
        "[A1]\ndeadline = 2020-03-01T00:00:00Z\nopen_date = 2020-03-21T00:00:00Z\n",
        "[A9]\ndeadline = 2020-03-21T00:00:00Z\nopen_date = 2020-03-01T00:00:00Z\n",
        "deadline = 2020-03-21T00:00:00Z\n",
    ],
)
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        ingest.load_configs(text)


# -- properties ------------------------------------------------------------------

_row = st.tuples(
    st.sampled_from(["s1", "s2", "s3"]),
    st.sampled_from(["A1", "A2"]),
    st.integers(min_value=0, max_value=19 * 86400),
    st.sampled_from(ingest.VERDICTS),
)


def _rows_from(draw_rows, configs):
    cfg = {c.assignment_id: c for c in configs}
    passed = {}
    rows = []
    for sid, aid, secs, verdict in draw_rows:
        p = passed.setdefault((sid, aid), (hash((sid, aid)) % 2))
        ts = ingest.format_timestamp(cfg[aid].deadline - timedelta(seconds=secs))
        rows.append((sid, aid, ts, verdict, p))
    return rows


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(_row, min_size=1, max_size=30))
def test_log_roundtrip_and_bag_invariants(configs, draw_rows):
    rows = _rows_from(draw_rows, configs)
    text = log_text(rows)
    recs = ingest.parse_log(text, configs)
    again = ingest.serialize_log(recs)
    assert sorted(again.splitlines()[1:]) == sorted(text.splitlines()[1:])

    ds = ingest.build_bags(ingest.extract_features(recs, configs))
    passed = {(r[0], r[1]): r[4] for r in rows}
    for bag in ds.bags:
        X = bag.X
        assert X[:, 2].tolist() == list(range(1, len(bag) + 1))
        assert np.all(X[:, 1] == X[:, 1].max())
        assert X[0, 1] == X[:, 0].max()
        assert np.all(X[:, 3] <= X[:, 2])
        assert bag.label == passed[bag.key]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(*[st.floats(-1e3, 1e3)] * 4), min_size=2, max_size=40))
def test_standardized_moments(points):
    X = np.column_stack([np.array(points), np.zeros(len(points))])
    if np.any(X[:, :4].std(axis=0) < 1e-3):
        return
    Z = ingest.fit_normalization(X).transform(X)
    np.testing.assert_allclose(Z[:, :4].mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(Z[:, :4].std(axis=0), 1, atol=1e-9)
