from __future__ import annotations

from datetime import datetime, timezone

import numpy as np
import pytest

from ojprofile import ingest, synthgen
from ojprofile.artifacts import train_pipeline

UTC = timezone.utc


@pytest.fixture
def a1():
    return ingest.AssignmentConfig("A1", datetime(2020, 3, 21, tzinfo=UTC), datetime(2020, 3, 1, tzinfo=UTC))


@pytest.fixture
def configs(a1):
    a2 = ingest.AssignmentConfig("A2", datetime(2020, 5, 16, tzinfo=UTC), datetime(2020, 4, 25, tzinfo=UTC))
    return [a1, a2]


def log_text(rows):
    return "\n".join([",".join(ingest.LOG_HEADER)] + [",".join(map(str, r)) for r in rows]) + "\n"


@pytest.fixture(scope="session")
def rushers_config():
    return synthgen.planted_corpus("deadline_rushers", n_students=200, seed=42)


@pytest.fixture(scope="session")
def rushers(rushers_config):
    return ingest.load_dataset(synthgen.generate_csv(rushers_config), list(rushers_config.assignments))


@pytest.fixture(scope="session")
def small_rushers():
    cfg = synthgen.planted_corpus("deadline_rushers", n_students=60, seed=3)
    return ingest.load_dataset(synthgen.generate_csv(cfg), list(cfg.assignments)), cfg


@pytest.fixture(scope="session")
def small_artifact(small_rushers):
    dataset, cfg = small_rushers
    return train_pipeline(dataset, list(cfg.assignments), model_name="rf", seed=0, n_estimators=20)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
