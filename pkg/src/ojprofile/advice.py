"""Advice rules evaluated on a student's latest submission."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .explain.cohorts import CohortRule
from .ingest import FEATURES

ADVICE_IDS = ("start_early", "persist", "risk_group")


def default_risk_rule():
    return CohortRule(
        "D",
        (
            ("days_to_deadline", "<=", 2.15),
            ("days_to_deadline", "<=", 0.25),
            ("submissions_to_date", "<=", 37.5),
        ),
    )


@dataclass(frozen=True)
class AdviceConfig:
    """Thresholds behind each advice rule.

    ``start_early`` fires when the first submission came less than
    ``start_early_days`` before the deadline; ``persist`` when fewer than
    ``persist_submissions`` submissions have been made and less than
    ``persist_days`` remain; ``risk_group`` when the latest submission falls in
    ``risk_rule``.
    """

    start_early_days: float = 7.0
    persist_submissions: int = 40
    persist_days: float = 7.0
    risk_rule: CohortRule = field(default_factory=default_risk_rule)

    def to_dict(self):
        return {
            "start_early_days": self.start_early_days,
            "persist_submissions": self.persist_submissions,
            "persist_days": self.persist_days,
            "risk_rule": self.risk_rule.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            start_early_days=float(d.get("start_early_days", 7.0)),
            persist_submissions=int(d.get("persist_submissions", 40)),
            persist_days=float(d.get("persist_days", 7.0)),
            risk_rule=CohortRule.from_dict(d["risk_rule"]) if "risk_rule" in d else default_risk_rule(),
        )


def _value(x, name):
    return float(x[FEATURES.index(name)])


def triggered(x_raw, config):
    """Ids of the rules whose predicate holds on the raw descriptor row ``x_raw``."""
    x = np.asarray(x_raw, dtype=np.float64)
    out = []
    if _value(x, "first_submission_days_to_deadline") < config.start_early_days:
        out.append("start_early")
    if _value(x, "submissions_to_date") < config.persist_submissions and _value(x, "days_to_deadline") < config.persist_days:
        out.append("persist")
    if config.risk_rule.contains(x):
        out.append("risk_group")
    return out


def advice_message(rule_id, config):
    if rule_id == "start_early":
        return (
            f"Start working on the assignment earlier: students whose first submission comes at least "
            f"{config.start_early_days:g} days before the deadline succeed more often."
        )
    if rule_id == "persist":
        return (
            f"Keep submitting: students who reach {config.persist_submissions} submissions succeed more often, "
            f"and fewer than {config.persist_days:g} days remain."
        )
    if rule_id == "risk_group":
        return f"Your recent activity matches the highest-risk group ({config.risk_rule.describe()})."
    raise ValidationError(f"unknown advice rule {rule_id!r}")


@dataclass(frozen=True)
class FeedbackReport:
    risk_score: float
    advice_ids: tuple
    advice: tuple
    top_factors: tuple
    cohort: str | None

    def to_dict(self):
        return {
            "risk_score": self.risk_score,
            "advice_ids": list(self.advice_ids),
            "advice": list(self.advice),
            "top_factors": [{"feature": f, "phi": p} for f, p in self.top_factors],
            "cohort": self.cohort,
        }


def advise(x_raw, attribution, cohorts=(), config=None, success_probability=None, k=3):
    """Feedback for one student from their latest raw descriptor row.

    ``risk_score`` is ``1 - success_probability`` (the attribution's score when no
    probability is given); factors are the ``k`` largest Shapley values by magnitude.
    """
    config = config or AdviceConfig()
    ids = tuple(triggered(x_raw, config))
    prob = attribution.score if success_probability is None else success_probability
    cohort = next((c.name for c in cohorts if c.contains(x_raw)), None)
    return FeedbackReport(
        risk_score=float(1.0 - prob),
        advice_ids=ids,
        advice=tuple(advice_message(i, config) for i in ids),
        top_factors=tuple(attribution.top_factors(k)),
        cohort=cohort,
    )


def lowest_success_cohort(cohorts, X_raw, y):
    """The cohort with the lowest success rate (first one on ties)."""
    y = np.asarray(y, dtype=np.float64)
    rates = []
    for c in cohorts:
        mask = c.members(X_raw)
        rates.append(y[mask].mean() if mask.any() else np.inf)
    return cohorts[int(np.argmin(rates))]
