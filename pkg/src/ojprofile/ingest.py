"""Submission-log ingestion: parsing, descriptor extraction, standardization, bags.

The canonical log is a CSV with the header::

    student_id,assignment,timestamp,verdict,passed_assignment

Each row becomes a :class:`SubmissionRecord`; each record then yields one
:class:`FeatureVector` carrying the five behavioural descriptors, and the vectors of
one (student, assignment) pair form a :class:`Bag`.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_features
from .exceptions import ConfigError, DeadlineError, DegenerateFeatureError, LogParseError, ValidationError

FEATURES = (
    "days_to_deadline",
    "first_submission_days_to_deadline",
    "submissions_to_date",
    "submission_days_to_date",
    "assignment",
)
REAL_FEATURES = FEATURES[:4]
N_FEATURES = len(FEATURES)

VERDICTS = ("success", "test_error", "compile_error", "time_error", "memory_error", "function_error")
FAILURE_VERDICTS = VERDICTS[1:]
ASSIGNMENTS = ("A1", "A2")
LOG_HEADER = ("student_id", "assignment", "timestamp", "verdict", "passed_assignment")

SECONDS_PER_DAY = 86400.0


def parse_timestamp(text):
    """Parse an ISO-8601 timestamp into an aware UTC datetime.

    A trailing ``Z`` is accepted; a timestamp without offset is taken as UTC.
    """
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts):
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class AssignmentConfig:
    assignment_id: str
    deadline: datetime
    open_date: datetime
    time_limit_s: int = 10
    memory_limit_mb: int = 100
    year_tag: str | None = None

    def __post_init__(self):
        if self.assignment_id not in ASSIGNMENTS:
            raise ConfigError(f"unknown assignment {self.assignment_id!r}; expected one of {ASSIGNMENTS}")
        if self.deadline.tzinfo is None or self.open_date.tzinfo is None:
            raise ConfigError("deadline and open_date must be timezone-aware (UTC)")
        if not self.open_date < self.deadline:
            raise ConfigError(f"{self.assignment_id}: open_date must precede deadline")

    @property
    def academic_year(self):
        """Year tag used to group summaries, e.g. ``2019-20`` for a March 2020 deadline."""
        if self.year_tag:
            return self.year_tag
        y = self.deadline.year
        start = y if self.deadline.month >= 9 else y - 1
        return f"{start}-{(start + 1) % 100:02d}"

    @property
    def window_days(self):
        return (self.deadline - self.open_date).total_seconds() / SECONDS_PER_DAY

    def to_dict(self):
        d = {
            "assignment_id": self.assignment_id,
            "deadline": format_timestamp(self.deadline),
            "open_date": format_timestamp(self.open_date),
            "time_limit_s": self.time_limit_s,
            "memory_limit_mb": self.memory_limit_mb,
        }
        if self.year_tag:
            d["year_tag"] = self.year_tag
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                assignment_id=d["assignment_id"],
                deadline=parse_timestamp(d["deadline"]),
                open_date=parse_timestamp(d["open_date"]),
                time_limit_s=int(d.get("time_limit_s", 10)),
                memory_limit_mb=int(d.get("memory_limit_mb", 100)),
                year_tag=d.get("year_tag") or None,
            )
        except KeyError as exc:
            raise ConfigError(f"assignment config missing key {exc.args[0]!r}") from None
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ConfigError(f"bad assignment config value: {exc}") from None


def load_configs(text):
    """Read assignment configs from key-value text.

    Either INI sections named after the assignment (``[A1]``) or a sectionless file
    carrying an ``assignment`` key.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        if not text.lstrip().startswith("["):
            text = "[__single__]\n" + text
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    configs = []
    for section in parser.sections():
        values = dict(parser[section])
        if section == "__single__":
            if "assignment" not in values:
                raise ConfigError("sectionless config needs an 'assignment' key")
            aid = values.pop("assignment")
        else:
            aid = values.pop("assignment", section)
        values["assignment_id"] = aid
        configs.append(AssignmentConfig.from_dict(values))
    if not configs:
        raise ConfigError("config file defines no assignment")
    return configs


def dump_configs(configs):
    lines = []
    for cfg in configs:
        d = cfg.to_dict()
        lines.append(f"[{d.pop('assignment_id')}]")
        lines.extend(f"{k} = {v}" for k, v in d.items())
        lines.append("")
    return "\n".join(lines)


def config_map(configs):
    out = {}
    for cfg in configs:
        if cfg.assignment_id in out:
            raise ConfigError(f"duplicate config for {cfg.assignment_id}")
        out[cfg.assignment_id] = cfg
    return out


@dataclass(frozen=True)
class SubmissionRecord:
    student_id: str
    assignment_id: str
    submitted_at: datetime
    verdict: str
    passed_assignment: bool


def parse_log(csv_text, configs):
    """Parse a submission log into records sorted by (student, assignment, time).

    Data rows are numbered from 1 in error messages.
    """
    cfgs = config_map(configs)
    reader = csv.reader(io.StringIO(csv_text))
    header = next(reader, None)
    if header is None:
        return []
    if tuple(h.strip() for h in header) != LOG_HEADER:
        raise LogParseError(0, f"expected header {','.join(LOG_HEADER)!r}, got {','.join(header)!r}")

    records = []
    passed_by_group = {}
    row_no = 0
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        row_no += 1
        if len(row) != len(LOG_HEADER):
            raise LogParseError(row_no, f"expected {len(LOG_HEADER)} fields, got {len(row)}")
        student, aid, ts_text, verdict, passed_text = (c.strip() for c in row)
        if not student:
            raise LogParseError(row_no, "empty student_id")
        if aid not in cfgs:
            raise LogParseError(row_no, f"no config for assignment {aid!r}")
        if verdict not in VERDICTS:
            raise LogParseError(row_no, f"unknown verdict {verdict!r}")
        try:
            ts = parse_timestamp(ts_text)
        except ValueError:
            raise LogParseError(row_no, f"unparseable timestamp {ts_text!r}") from None
        if ts > cfgs[aid].deadline:
            raise DeadlineError(row_no, f"timestamp {ts_text} is after the {aid} deadline")
        if passed_text not in ("0", "1"):
            raise LogParseError(row_no, f"passed_assignment must be 0 or 1, got {passed_text!r}")
        passed = passed_text == "1"
        key = (student, aid)
        if passed_by_group.setdefault(key, passed) != passed:
            raise LogParseError(row_no, f"passed_assignment for {student}/{aid} contradicts an earlier row")
        records.append(SubmissionRecord(student, aid, ts, verdict, passed))

    records.sort(key=lambda r: (r.student_id, r.assignment_id, r.submitted_at))
    return records


def serialize_log(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for r in records:
        writer.writerow(
            [r.student_id, r.assignment_id, format_timestamp(r.submitted_at), r.verdict, int(r.passed_assignment)]
        )
    return buf.getvalue()


@dataclass(frozen=True)
class FeatureVector:
    """One submission described by the five descriptors plus its bag label.

    After standardization the real-valued fields hold z-scores instead of days/counts.
    """

    student_id: str
    assignment_id: str
    submitted_at: datetime
    verdict: str
    days_to_deadline: float
    first_submission_days_to_deadline: float
    submissions_to_date: float
    submission_days_to_date: float
    assignment: int
    success: int

    @property
    def key(self):
        return (self.student_id, self.assignment_id)

    def values(self):
        return tuple(float(getattr(self, name)) for name in FEATURES)


def days_between(later, earlier):
    return (later - earlier).total_seconds() / SECONDS_PER_DAY


def _group(records):
    groups = defaultdict(list)
    for r in records:
        groups[(r.student_id, r.assignment_id)].append(r)
    return groups


def extract_features(records, configs):
    """Derive one :class:`FeatureVector` per record.

    Within a (student, assignment) group the records are walked in time order:
    the submission count includes the current record and the day count tallies
    distinct UTC calendar dates so far.
    """
    cfgs = config_map(configs)
    out = []
    for (student, aid), group in sorted(_group(records).items()):
        group = sorted(group, key=lambda r: r.submitted_at)
        deadline = cfgs[aid].deadline
        first = days_between(deadline, group[0].submitted_at)
        seen_dates = set()
        for k, rec in enumerate(group, start=1):
            seen_dates.add(rec.submitted_at.astimezone(timezone.utc).date())
            out.append(
                FeatureVector(
                    student_id=student,
                    assignment_id=aid,
                    submitted_at=rec.submitted_at,
                    verdict=rec.verdict,
                    days_to_deadline=days_between(deadline, rec.submitted_at),
                    first_submission_days_to_deadline=first,
                    submissions_to_date=k,
                    submission_days_to_date=len(seen_dates),
                    assignment=ASSIGNMENTS.index(aid),
                    success=int(rec.passed_assignment),
                )
            )
    return out


def features_to_matrix(vectors):
    """Stack vectors into ``(X, y)`` arrays in the canonical feature order."""
    if not vectors:
        return np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64)
    X = np.array([v.values() for v in vectors], dtype=np.float64)
    y = np.array([v.success for v in vectors], dtype=np.int64)
    return X, y


# -- standardization ------------------------------------------------------------


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature location/scale for the four real descriptors.

    For ``zscore`` the location is the mean and the scale the population standard
    deviation; for ``minmax`` they are the minimum and the range.
    """

    mean: tuple
    scale: tuple
    method: str = "zscore"
    features: tuple = REAL_FEATURES

    def __post_init__(self):
        for name, s in zip(self.features, self.scale):
            if not s > 0:
                raise DegenerateFeatureError(name)

    def transform(self, X):
        X = np.array(X, dtype=np.float64, copy=True)
        n = len(self.features)
        X[:, :n] = (X[:, :n] - np.asarray(self.mean)) / np.asarray(self.scale)
        return X

    def inverse_transform(self, X):
        X = np.array(X, dtype=np.float64, copy=True)
        n = len(self.features)
        X[:, :n] = X[:, :n] * np.asarray(self.scale) + np.asarray(self.mean)
        return X

    def to_dict(self):
        return {"method": self.method, "features": list(self.features), "mean": list(self.mean), "scale": list(self.scale)}

    @classmethod
    def from_dict(cls, d):
        return cls(
            mean=tuple(float(v) for v in d["mean"]),
            scale=tuple(float(v) for v in d["scale"]),
            method=d.get("method", "zscore"),
            features=tuple(d.get("features", REAL_FEATURES)),
        )


def _stats_from_matrix(X, method):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValidationError("normalization needs at least 2 vectors")
    real = X[:, : len(REAL_FEATURES)]
    if method == "zscore":
        loc = real.mean(axis=0)
        scale = real.std(axis=0)
    elif method == "minmax":
        loc = real.min(axis=0)
        scale = real.max(axis=0) - loc
    else:
        raise ValidationError(f"unknown normalization method {method!r}")
    for name, s in zip(REAL_FEATURES, scale):
        if not s > 0:
            raise DegenerateFeatureError(name)
    return NormalizationStats(tuple(float(v) for v in loc), tuple(float(v) for v in scale), method)


def fit_normalization(train, method="zscore"):
    """Fit standardization statistics on training vectors (or an instance matrix)."""
    X = features_to_matrix(train)[0] if _is_vector_list(train) else train
    return _stats_from_matrix(X, method)


def apply_normalization(stats, v):
    """Standardize one vector; the assignment indicator and label are left untouched."""
    z = [(getattr(v, name) - m) / s for name, m, s in zip(stats.features, stats.mean, stats.scale)]
    return replace(v, **dict(zip(stats.features, z)))


def _is_vector_list(obj):
    return isinstance(obj, (list, tuple)) and (len(obj) == 0 or isinstance(obj[0], FeatureVector))


class DescriptorScaler(TransformerMixin, BaseEstimator):
    """Standardize the real descriptors, pass the binary assignment column through.

    Parameters
    ----------
    method : {"zscore", "minmax"}
    """

    def __init__(self, method="zscore"):
        self.method = method

    def fit(self, X, y=None):
        X = check_features(X, N_FEATURES)
        self.stats_ = _stats_from_matrix(X, self.method)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "stats_")
        return self.stats_.transform(check_features(X, N_FEATURES))

    def inverse_transform(self, X):
        check_is_fitted(self, "stats_")
        return self.stats_.inverse_transform(check_features(X, N_FEATURES))

    @classmethod
    def from_stats(cls, stats):
        scaler = cls(method=stats.method)
        scaler.stats_ = stats
        scaler.n_features_in_ = N_FEATURES
        return scaler


# -- bags -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Bag:
    """All submissions of one student on one assignment, in time order."""

    key: tuple
    instances: tuple
    label: int
    year_tag: str = ""
    X: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.instances:
            raise ValidationError(f"bag {self.key} is empty")
        object.__setattr__(self, "X", np.array([v.values() for v in self.instances], dtype=np.float64))

    def __len__(self):
        return len(self.instances)

    @property
    def verdicts(self):
        return tuple(v.verdict for v in self.instances)


@dataclass
class Dataset:
    bags: list
    normalization: NormalizationStats | None = None
    provenance: str = ""

    def __post_init__(self):
        keys = [b.key for b in self.bags]
        if len(set(keys)) != len(keys):
            raise ValidationError("duplicate (student, assignment) bags")

    def __len__(self):
        return len(self.bags)

    @property
    def labels(self):
        return np.array([b.label for b in self.bags], dtype=np.int64)

    @property
    def keys(self):
        return [b.key for b in self.bags]

    def instance_matrix(self):
        """Return ``(X, y, groups)`` where ``groups`` holds each instance's bag index."""
        if not self.bags:
            return np.empty((0, N_FEATURES)), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        X = np.vstack([b.X for b in self.bags])
        y = np.concatenate([np.full(len(b), b.label, dtype=np.int64) for b in self.bags])
        groups = np.concatenate([np.full(len(b), i, dtype=np.int64) for i, b in enumerate(self.bags)])
        return X, y, groups

    def feature_vectors(self):
        return [v for b in self.bags for v in b.instances]

    def subset(self, indices):
        return Dataset([self.bags[i] for i in indices], self.normalization, self.provenance)


def build_bags(features, configs=None, provenance=""):
    """Group feature vectors into one bag per (student, assignment)."""
    if not features:
        raise ValidationError("build_bags needs at least one feature vector")
    years = {c.assignment_id: c.academic_year for c in configs} if configs else {}
    groups = defaultdict(list)
    for v in features:
        groups[v.key].append(v)
    bags = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda v: v.submitted_at)
        labels = {v.success for v in members}
        assert len(labels) == 1, f"mixed labels inside bag {key}"
        bags.append(Bag(key, tuple(members), labels.pop(), years.get(key[1], "")))
    return Dataset(bags, None, provenance)


def load_dataset(csv_text, configs, provenance=""):
    records = parse_log(csv_text, configs)
    if not records:
        raise ValidationError("log contains no submissions")
    return build_bags(extract_features(records, configs), configs, provenance)


# -- summary table --------------------------------------------------------------

SUMMARY_COLUMNS = (
    "year",
    "assignment",
    "students_total",
    "students_success",
    "students_failure",
    "attempts_total",
    "attempts_success_pct",
    "attempts_failure_pct",
    "avg_submissions_success",
    "avg_submissions_failure",
    "attempts_until_success",
)


@dataclass(frozen=True)
class SummaryRow:
    year: str
    assignment: str
    students_total: int
    students_success: int
    students_failure: int
    attempts_total: int
    attempts_success_pct: float
    attempts_failure_pct: float
    avg_submissions_success: float
    avg_submissions_failure: float
    attempts_until_success: float

    def as_dict(self):
        return {c: getattr(self, c) for c in SUMMARY_COLUMNS}


def _mean_or_nan(values):
    return float(np.mean(values)) if values else math.nan


def summarize(dataset):
    """Per (year, assignment) counts in the layout of the course summary table.

    "Attempts until success" averages the 1-based position of the first ``success``
    verdict over passing students; failing students are omitted.
    """
    groups = defaultdict(list)
    for bag in dataset.bags:
        groups[(bag.year_tag, bag.key[1])].append(bag)
    rows = []
    for (year, aid), bags in sorted(groups.items()):
        passing = [b for b in bags if b.label == 1]
        failing = [b for b in bags if b.label == 0]
        attempts = sum(len(b) for b in bags)
        ok = sum(v == "success" for b in bags for v in b.verdicts)
        until = [b.verdicts.index("success") + 1 for b in passing if "success" in b.verdicts]
        rows.append(
            SummaryRow(
                year=year,
                assignment=aid,
                students_total=len(bags),
                students_success=len(passing),
                students_failure=len(failing),
                attempts_total=attempts,
                attempts_success_pct=100.0 * ok / attempts,
                attempts_failure_pct=100.0 * (attempts - ok) / attempts,
                avg_submissions_success=_mean_or_nan([len(b) for b in passing]),
                avg_submissions_failure=_mean_or_nan([len(b) for b in failing]),
                attempts_until_success=_mean_or_nan(until),
            )
        )
    return rows


def summary_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for row in rows:
        writer.writerow([_fmt_cell(row.as_dict()[c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def _fmt_cell(value):
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.4f}"
    return str(value)


def features_to_csv(vectors):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("student_id", "assignment_id", "timestamp", "verdict") + FEATURES + ("success",))
    for v in vectors:
        writer.writerow(
            [v.student_id, v.assignment_id, format_timestamp(v.submitted_at), v.verdict]
            + [repr(float(x)) for x in v.values()]
            + [v.success]
        )
    return buf.getvalue()


def make_timestamp(deadline, days_before):
    """Timestamp ``days_before`` days ahead of ``deadline``, truncated to whole seconds."""
    ts = deadline - timedelta(seconds=days_before * SECONDS_PER_DAY)
    return ts.replace(microsecond=0)
