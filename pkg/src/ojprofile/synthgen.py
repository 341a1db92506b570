"""Synthetic submission logs from parameterized student archetypes.

Each student draws one archetype and then, for every configured assignment, a
first-submission offset (days before the deadline), a per-day submission rate
and a total submission count. Submissions are laid out day by day from the
first one, with a Poisson number per day jittered uniformly inside the day; any
submissions still pending when the deadline day is reached land on that day.
Whether the student passes is drawn from the archetype's threshold rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .exceptions import InfeasibleArchetypeError, UnknownNameError, ValidationError
from .ingest import FAILURE_VERDICTS, SECONDS_PER_DAY, AssignmentConfig, SubmissionRecord, serialize_log

DISTRIBUTIONS = ("uniform", "randint", "poisson", "constant")
RULE_FEATURES = ("first_submission_offset", "total_submissions")
PRESETS = ("deadline_rushers", "persistence_pays", "mixed")
PRESET_VERSION = "1"

# relative frequency of each failure verdict
FAILURE_WEIGHTS = (0.45, 0.2, 0.1, 0.05, 0.2)


@dataclass(frozen=True)
class Distribution:
    """``uniform(a, b)`` on reals, ``randint(a, b)`` inclusive, ``poisson(lam)`` or ``constant(v)``."""

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in DISTRIBUTIONS:
            raise ValidationError(f"unknown distribution {self.kind!r}")
        want = {"uniform": 2, "randint": 2, "poisson": 1, "constant": 1}[self.kind]
        if len(self.params) != want:
            raise ValidationError(f"{self.kind} takes {want} parameter(s)")
        if self.kind in ("uniform", "randint") and self.params[0] > self.params[1]:
            raise ValidationError(f"{self.kind} bounds are reversed")
        if self.kind == "poisson" and self.params[0] < 0:
            raise ValidationError("poisson rate must be non-negative")

    def sample(self, rng):
        if self.kind == "uniform":
            return float(rng.uniform(*self.params))
        if self.kind == "randint":
            return int(rng.integers(self.params[0], self.params[1] + 1))
        if self.kind == "poisson":
            return int(rng.poisson(self.params[0]))
        return self.params[0]

    @property
    def upper(self):
        """Largest value the distribution can produce (``inf`` when unbounded)."""
        if self.kind == "poisson":
            return math.inf
        return self.params[-1]

    @property
    def lower(self):
        if self.kind == "poisson":
            return 0
        return self.params[0]

    def cdf(self, x):
        """Cumulative distribution function, used to check sampled statistics."""
        from scipy import stats

        if self.kind == "uniform":
            a, b = self.params
            return stats.uniform(a, b - a).cdf(x)
        if self.kind == "randint":
            a, b = self.params
            return stats.randint(a, b + 1).cdf(x)
        if self.kind == "poisson":
            return stats.poisson(self.params[0]).cdf(x)
        return (np.asarray(x) >= self.params[0]).astype(float)


def uniform(a, b):
    return Distribution("uniform", (float(a), float(b)))


def randint(a, b):
    return Distribution("randint", (int(a), int(b)))


def poisson(lam):
    return Distribution("poisson", (float(lam),))


def constant(v):
    return Distribution("constant", (v,))


@dataclass(frozen=True)
class PassRule:
    """Pass with probability ``p_hi`` when ``feature <op> threshold`` holds, else ``p_lo``."""

    feature: str
    op: str
    threshold: float
    p_hi: float
    p_lo: float

    def __post_init__(self):
        if self.feature not in RULE_FEATURES:
            raise ValidationError(f"pass rule feature must be one of {RULE_FEATURES}")
        if self.op not in ("<", ">"):
            raise ValidationError("pass rule operator must be '<' or '>'")
        for p in (self.p_hi, self.p_lo):
            if not 0.0 <= p <= 1.0:
                raise ValidationError("pass probabilities must lie in [0, 1]")

    def holds(self, offset, total):
        value = offset if self.feature == "first_submission_offset" else total
        return value < self.threshold if self.op == "<" else value > self.threshold

    def probability(self, offset, total):
        return self.p_hi if self.holds(offset, total) else self.p_lo

    @classmethod
    def always(cls, p):
        return cls("total_submissions", ">", 0, p, p)


@dataclass(frozen=True)
class ArchetypeSpec:
    name: str
    first_submission_offset: Distribution
    daily_submission_rate: Distribution
    total_submissions: Distribution
    pass_rule: PassRule


@dataclass(frozen=True)
class GeneratorConfig:
    """Archetypes with population weights, assignments and student count.

    ``post_success_rate`` is the chance that a passing student with several
    submissions reaches success before the last one and keeps resubmitting
    (the extra submissions are also accepted).
    """

    seed: int
    archetypes: tuple
    weights: tuple
    assignments: tuple
    n_students: int
    post_success_rate: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        if len(self.archetypes) == 0 or len(self.archetypes) != len(self.weights):
            raise ValidationError("need one weight per archetype")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValidationError("archetype weights must be non-negative and sum to 1")
        if self.n_students < 1:
            raise ValidationError("need at least one student")
        if not self.assignments:
            raise ValidationError("need at least one assignment config")
        if not 0.0 <= self.post_success_rate <= 1.0:
            raise ValidationError("post_success_rate must lie in [0, 1]")
        for arch in self.archetypes:
            for cfg in self.assignments:
                if arch.first_submission_offset.upper >= cfg.window_days:
                    raise InfeasibleArchetypeError(
                        f"archetype {arch.name!r} can start {arch.first_submission_offset.upper} days "
                        f"before the {cfg.assignment_id} deadline, but the window is {cfg.window_days:g} days"
                    )
            if arch.first_submission_offset.lower <= 0:
                raise InfeasibleArchetypeError(f"archetype {arch.name!r} needs a positive first-submission offset")
            if arch.daily_submission_rate.lower < 0:
                raise InfeasibleArchetypeError(f"archetype {arch.name!r} has a negative submission rate")


def _truncate(ts):
    return ts.replace(microsecond=0)


def _submission_offsets(rng, offset, total, rate):
    """Offsets in days from the first submission, first one at 0, sorted."""
    times = [0.0]
    day = 0
    n_days = max(1, math.ceil(offset))
    while len(times) < total:
        start = float(day)
        end = min(day + 1.0, offset)
        last = day >= n_days - 1
        want = total - len(times) if last else min(int(rng.poisson(rate)), total - len(times))
        if want:
            times.extend(np.sort(rng.uniform(start, end, size=want)).tolist())
        day += 1
    return times


def _student_records(rng, student_id, arch, cfg, post_success_rate):
    offset = float(arch.first_submission_offset.sample(rng))
    total = max(1, int(arch.total_submissions.sample(rng)))
    rate = max(0.0, float(arch.daily_submission_rate.sample(rng)))
    passed = bool(rng.random() < arch.pass_rule.probability(offset, total))

    first = cfg.deadline - timedelta(seconds=offset * SECONDS_PER_DAY)
    stamps = [_truncate(first + timedelta(seconds=t * SECONDS_PER_DAY)) for t in _submission_offsets(rng, offset, total, rate)]
    stamps = [min(ts, cfg.deadline) for ts in stamps]

    verdicts = list(rng.choice(FAILURE_VERDICTS, size=total, p=FAILURE_WEIGHTS))
    if passed:
        success_at = total - 1
        if total > 1 and rng.random() < post_success_rate:
            success_at = int(rng.integers(0, total - 1))
        for i in range(success_at, total):
            verdicts[i] = "success"
    return [SubmissionRecord(student_id, cfg.assignment_id, ts, str(v), passed) for ts, v in zip(stamps, verdicts)]


def generate(config):
    """Submission records for ``config``, sorted by (student, assignment, time)."""
    root = np.random.SeedSequence(int(config.seed))
    children = root.spawn(config.n_students)
    width = max(4, len(str(config.n_students)))
    records = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        arch = config.archetypes[int(rng.choice(len(config.archetypes), p=config.weights))]
        sid = f"s{i:0{width}d}"
        for cfg in sorted(config.assignments, key=lambda c: c.assignment_id):
            records.extend(_student_records(rng, sid, arch, cfg, config.post_success_rate))
    records.sort(key=lambda r: (r.student_id, r.assignment_id, r.submitted_at))
    return records


def generate_csv(config):
    return serialize_log(generate(config))


def student_archetypes(config):
    """Archetype name of each generated student id (replays the generator's draws)."""
    root = np.random.SeedSequence(int(config.seed))
    width = max(4, len(str(config.n_students)))
    out = {}
    for i, child in enumerate(root.spawn(config.n_students)):
        rng = np.random.default_rng(child)
        out[f"s{i:0{width}d}"] = config.archetypes[int(rng.choice(len(config.archetypes), p=config.weights))].name
    return out


# -- presets ------------------------------------------------------------------------


def default_assignments():
    """Two three-week assignments in spring 2020."""
    utc = timezone.utc
    return (
        AssignmentConfig("A1", datetime(2020, 3, 21, tzinfo=utc), datetime(2020, 2, 29, tzinfo=utc)),
        AssignmentConfig("A2", datetime(2020, 5, 16, tzinfo=utc), datetime(2020, 4, 25, tzinfo=utc)),
    )


RUSHER_RULE = PassRule("first_submission_offset", "<", 1.0, 0.1, 0.95)
PERSISTENCE_RULE = PassRule("total_submissions", ">", 40, 0.9, 0.1)


def _rushers():
    return (
        ArchetypeSpec("rusher", uniform(0.05, 0.95), uniform(2, 6), randint(1, 8), RUSHER_RULE),
        ArchetypeSpec("early_starter", uniform(2, 14), uniform(0.5, 2), randint(1, 8), RUSHER_RULE),
    )


def _persistence():
    return (
        ArchetypeSpec("persistent", uniform(1, 14), uniform(3, 8), randint(41, 80), PERSISTENCE_RULE),
        ArchetypeSpec("quitter", uniform(1, 14), uniform(0.5, 3), randint(2, 39), PERSISTENCE_RULE),
    )


def planted_corpus(name, n_students=200, seed=42, post_success_rate=0.0):
    """Named generator presets with planted pass rules.

    ``deadline_rushers`` keys on a first submission less than one day before the
    deadline, ``persistence_pays`` on more than 40 submissions and ``mixed`` draws
    half of its students from each.
    """
    if name == "deadline_rushers":
        archetypes, weights = _rushers(), (0.5, 0.5)
    elif name == "persistence_pays":
        archetypes, weights = _persistence(), (0.5, 0.5)
    elif name == "mixed":
        archetypes, weights = _rushers() + _persistence(), (0.25, 0.25, 0.25, 0.25)
    else:
        raise UnknownNameError(f"unknown preset {name!r}; choose from {PRESETS}")
    return GeneratorConfig(
        seed=seed,
        archetypes=archetypes,
        weights=weights,
        assignments=default_assignments(),
        n_students=n_students,
        post_success_rate=post_success_rate,
        name=f"{name}@{PRESET_VERSION}",
    )
