"""Trained pipeline artifact and the request-level predictor built on it.

An artifact bundles everything needed to score a submission history offline or
from the HTTP service: assignment configs, normalization statistics, the fitted
bag model, the Shapley background, cohort rules and advice thresholds. Its
``model_version`` is a content hash, so identical training runs give identical
versions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .advice import AdviceConfig, advise, lowest_success_cohort
from .exceptions import ValidationError
from .explain.cohorts import CohortRule, extract_cohorts
from .explain.shapley import Attribution, sample_background, score_function, shapley_values
from .ingest import (
    FEATURES,
    VERDICTS,
    AssignmentConfig,
    DescriptorScaler,
    NormalizationStats,
    SubmissionRecord,
    config_map,
    extract_features,
    features_to_matrix,
    format_timestamp,
    parse_timestamp,
)
from .models import build_model
from .persistence import dumps, model_from_dict, model_to_dict

ARTIFACT_FORMAT = "ojprofile.artifact"
SCHEMA_VERSION = 1
RESPONSE_SCHEMA_VERSION = 1


@dataclass
class PipelineArtifact:
    configs: list
    scaler: DescriptorScaler
    model: object
    background: np.ndarray
    cohorts: list
    advice: AdviceConfig
    model_name: str = ""
    seed: int = 0

    def _payload(self):
        return {
            "format": ARTIFACT_FORMAT,
            "schema_version": SCHEMA_VERSION,
            "model_name": self.model_name,
            "seed": self.seed,
            "configs": [c.to_dict() for c in sorted(self.configs, key=lambda c: c.assignment_id)],
            "normalization": self.scaler.stats_.to_dict(),
            "model": model_to_dict(self.model),
            "background": np.asarray(self.background).tolist(),
            "cohorts": [c.to_dict() for c in self.cohorts],
            "advice": self.advice.to_dict(),
        }

    @property
    def model_version(self):
        text = dumps(self._payload())
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_dict(self):
        payload = self._payload()
        payload["model_version"] = hashlib.sha256(dumps(payload).encode()).hexdigest()[:16]
        return payload

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != ARTIFACT_FORMAT:
            raise ValidationError("not a pipeline artifact")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported artifact schema version {d.get('schema_version')}")
        art = cls(
            configs=[AssignmentConfig.from_dict(c) for c in d["configs"]],
            scaler=DescriptorScaler.from_stats(NormalizationStats.from_dict(d["normalization"])),
            model=model_from_dict(d["model"]),
            background=np.asarray(d["background"], dtype=np.float64),
            cohorts=[CohortRule.from_dict(c) for c in d["cohorts"]],
            advice=AdviceConfig.from_dict(d["advice"]),
            model_name=d.get("model_name", ""),
            seed=int(d.get("seed", 0)),
        )
        stored = d.get("model_version")
        if stored and stored != art.model_version:
            raise ValidationError("artifact content does not match its model_version")
        return art

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def train_pipeline(dataset, configs, model_name="rf", seed=0, background_size=100, cohort_leaves=4,
                   normalization="zscore", retune_risk=False, **hyperparameters):
    """Fit normalization, the bag model, the Shapley background and cohorts on ``dataset``."""
    X, y, _ = dataset.instance_matrix()
    scaler = DescriptorScaler(normalization).fit(X)
    model = build_model(model_name, seed=seed, **hyperparameters)
    model.fit([scaler.transform(b.X) for b in dataset.bags], dataset.labels)
    background = sample_background(scaler.transform(X), background_size, seed)
    cohorts = extract_cohorts(X, y, max_leaves=cohort_leaves, seed=seed)
    advice = AdviceConfig()
    if retune_risk and len(cohorts) > 1:
        advice = AdviceConfig(risk_rule=lowest_success_cohort(cohorts, X, y))
    return PipelineArtifact(list(configs), scaler, model, background, cohorts, advice, model_name, seed)


# -- prediction requests ------------------------------------------------------------


class RequestError(ValidationError):
    """A request the predictor refuses; ``status`` is the matching HTTP code."""

    def __init__(self, message, status=400):
        super().__init__(message)
        self.status = status


def _ts(value, what):
    if not isinstance(value, str):
        raise RequestError(f"{what} must be an ISO-8601 string")
    try:
        return parse_timestamp(value)
    except ValueError:
        raise RequestError(f"unparseable timestamp in {what}: {value!r}") from None


def _verdict(value, what):
    if value is None:
        return "test_error"
    if value not in VERDICTS:
        raise RequestError(f"unknown verdict in {what}: {value!r}")
    return value


class Predictor:
    """Score one (student, assignment) submission history against a loaded artifact."""

    def __init__(self, artifact):
        self.artifact = artifact
        self.configs = config_map(artifact.configs)
        self.version = artifact.model_version
        self._score = score_function(artifact.model)

    def records(self, request):
        """Validated submission records of ``request``, current submission last."""
        if not isinstance(request, dict):
            raise RequestError("request must be a JSON object")
        student = request.get("student_id")
        aid = request.get("assignment_id")
        if not isinstance(student, str) or not student:
            raise RequestError("student_id must be a non-empty string")
        if aid not in self.configs:
            raise RequestError(f"unknown assignment_id {aid!r}")
        deadline = self.configs[aid].deadline
        history = request.get("history", [])
        if not isinstance(history, list):
            raise RequestError("history must be a list")
        events = []
        for i, h in enumerate(history):
            if not isinstance(h, dict):
                raise RequestError(f"history[{i}] must be an object")
            events.append((_ts(h.get("submitted_at"), f"history[{i}]"), _verdict(h.get("verdict"), f"history[{i}]")))
        events.append((_ts(request.get("submitted_at"), "submitted_at"), _verdict(request.get("verdict"), "request")))
        for (a, _), (b, _) in zip(events, events[1:]):
            if b < a:
                raise RequestError("history must be time-ordered and precede submitted_at")
        for ts, _ in events:
            if ts > deadline:
                raise RequestError(f"submission at {format_timestamp(ts)} is after the {aid} deadline", status=422)
        return [SubmissionRecord(student, aid, ts, v, False) for ts, v in events]

    def predict(self, request):
        records = self.records(request)
        vectors = extract_features(records, self.artifact.configs)
        raw, _ = features_to_matrix(vectors)
        Xs = self.artifact.scaler.transform(raw)
        model = self.artifact.model
        prob = float(model.score_bags([Xs])[0])
        label = int(model.predict([Xs])[0])
        latest = Xs[-1:]
        phi, base = shapley_values(model, latest, self.artifact.background)
        attribution = Attribution(phi[0], base, float(self._score(latest)[0]), FEATURES)
        report = advise(raw[-1], attribution, self.artifact.cohorts, self.artifact.advice, success_probability=prob)
        return {
            "schema_version": RESPONSE_SCHEMA_VERSION,
            "student_id": records[-1].student_id,
            "assignment_id": records[-1].assignment_id,
            "submitted_at": format_timestamp(records[-1].submitted_at),
            "n_submissions": len(records),
            "success_probability": prob,
            "predicted_label": label,
            "at_risk": label == 0,
            "top_factors": [{"feature": f, "phi": p} for f, p in report.top_factors],
            "advice_ids": list(report.advice_ids),
            "advice": list(report.advice),
            "cohort": report.cohort,
            "model_version": self.version,
        }


def requests_from_records(records):
    """One request per (student, assignment): the latest submission with the rest as history."""
    groups = {}
    for r in records:
        groups.setdefault((r.student_id, r.assignment_id), []).append(r)
    out = []
    for (student, aid), group in sorted(groups.items()):
        group = sorted(group, key=lambda r: r.submitted_at)
        out.append(
            {
                "student_id": student,
                "assignment_id": aid,
                "submitted_at": format_timestamp(group[-1].submitted_at),
                "verdict": group[-1].verdict,
                "history": [{"submitted_at": format_timestamp(r.submitted_at), "verdict": r.verdict} for r in group[:-1]],
            }
        )
    return out
