from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from ojprofile import ingest, synthgen
from ojprofile.exceptions import InfeasibleArchetypeError, UnknownNameError, ValidationError


def _one_archetype(p=1.0, offset=synthgen.uniform(1, 10), total=synthgen.randint(1, 6), n=10, seed=0):
    arch = synthgen.ArchetypeSpec("only", offset, synthgen.uniform(1, 3), total, synthgen.PassRule.always(p))
    return synthgen.GeneratorConfig(seed, (arch,), (1.0,), synthgen.default_assignments()[:1], n)


def test_same_seed_byte_identical():
    cfg = synthgen.planted_corpus("mixed", n_students=30, seed=9)
    assert synthgen.generate_csv(cfg) == synthgen.generate_csv(cfg)
    other = synthgen.planted_corpus("mixed", n_students=30, seed=10)
    assert synthgen.generate_csv(other) != synthgen.generate_csv(cfg)


def test_pass_probability_one_gives_all_positive():
    cfg = _one_archetype(p=1.0, n=10)
    ds = ingest.load_dataset(synthgen.generate_csv(cfg), list(cfg.assignments))
    assert len(ds) == 10
    assert ds.labels.tolist() == [1] * 10


def test_planted_rusher_failure_rate(rushers, rushers_config):
    arch = synthgen.student_archetypes(rushers_config)
    labels = [b.label for b in rushers.bags if arch[b.key[0]] == "rusher"]
    assert len(labels) > 100
    assert abs((1 - np.mean(labels)) - 0.9) <= 0.07


def test_verdicts_follow_labels(rushers_config):
    cfg = synthgen.planted_corpus("deadline_rushers", n_students=80, seed=1, post_success_rate=0.5)
    ds = ingest.load_dataset(synthgen.generate_csv(cfg), list(cfg.assignments))
    early_success = 0
    for bag in ds.bags:
        if bag.label:
            assert bag.verdicts[-1] == "success"
            early_success += bag.verdicts.index("success") < len(bag) - 1
        else:
            assert "success" not in bag.verdicts
    assert early_success > 0


def test_post_success_off_by_default(rushers):
    for bag in rushers.bags:
        if bag.label:
            assert bag.verdicts.index("success") == len(bag) - 1


def test_presets():
    r = synthgen.planted_corpus("deadline_rushers")
    assert {a.pass_rule for a in r.archetypes} == {synthgen.RUSHER_RULE}
    assert synthgen.RUSHER_RULE.feature == "first_submission_offset"
    assert synthgen.RUSHER_RULE.op == "<" and synthgen.RUSHER_RULE.threshold == 1.0

    p = synthgen.planted_corpus("persistence_pays")
    assert {a.pass_rule for a in p.archetypes} == {synthgen.PERSISTENCE_RULE}
    assert synthgen.PERSISTENCE_RULE.feature == "total_submissions" and synthgen.PERSISTENCE_RULE.threshold == 40

    m = synthgen.planted_corpus("mixed")
    rules = [a.pass_rule for a in m.archetypes]
    weight = {rule: sum(w for w, r in zip(m.weights, rules) if r == rule) for rule in set(rules)}
    assert weight == {synthgen.RUSHER_RULE: 0.5, synthgen.PERSISTENCE_RULE: 0.5}

    with pytest.raises(UnknownNameError):
        synthgen.planted_corpus("lazy")


def test_persistence_rule_recovered():
    cfg = synthgen.planted_corpus("persistence_pays", n_students=150, seed=5)
    ds = ingest.load_dataset(synthgen.generate_csv(cfg), list(cfg.assignments))
    many = [b.label for b in ds.bags if len(b) > 40]
    few = [b.label for b in ds.bags if len(b) <= 40]
    assert np.mean(many) > 0.8 and np.mean(few) < 0.2


def test_infeasible_offset():
    with pytest.raises(InfeasibleArchetypeError):
        _one_archetype(offset=synthgen.uniform(1, 30))
    with pytest.raises(InfeasibleArchetypeError):
        _one_archetype(offset=synthgen.poisson(3))


def test_weights_must_sum_to_one():
    arch = _one_archetype().archetypes[0]
    with pytest.raises(ValidationError):
        synthgen.GeneratorConfig(0, (arch, arch), (0.5, 0.6), synthgen.default_assignments(), 5)


@pytest.mark.parametrize("preset", synthgen.PRESETS)
def test_logs_parse_for_many_seeds(preset):
    assignments = list(synthgen.default_assignments())
    for seed in range(100 if preset == "deadline_rushers" else 20):
        text = synthgen.generate_csv(synthgen.planted_corpus(preset, n_students=4, seed=seed))
        records = ingest.parse_log(text, assignments)
        assert len(records) == text.count("\n") - 1


def test_sampled_statistics_match_distributions():
    offset = synthgen.uniform(0.5, 12)
    total = synthgen.randint(1, 9)
    cfg = _one_archetype(offset=offset, total=total, n=1000, seed=77)
    ds = ingest.load_dataset(synthgen.generate_csv(cfg), list(cfg.assignments))
    firsts = np.array([b.X[0, 1] for b in ds.bags])
    assert stats.kstest(firsts, offset.cdf).statistic < 0.1
    counts = np.array([len(b) for b in ds.bags])
    support = np.arange(1, 10)
    ecdf = np.array([(counts <= k).mean() for k in support])
    assert np.max(np.abs(ecdf - total.cdf(support))) < 0.1
    assert counts.min() >= 1
