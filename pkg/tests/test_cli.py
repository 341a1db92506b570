import json
import os

import pytest

from ojprofile import cli, ingest
from ojprofile.cli import main

from .pipeline import run, run_chain, tree_bytes


@pytest.fixture(scope="module")
def chain(tmp_path_factory):
    return run_chain(tmp_path_factory.mktemp("chain"))


def test_chain_outputs(chain):
    files = tree_bytes(chain)
    expected = {
        "log.csv", "log.cfg", "model.json", "predictions.jsonl",
        os.path.join("ingest", "features.csv"), os.path.join("ingest", "summary.csv"),
        os.path.join("eval", "evaluation_rf.json"), os.path.join("eval", "evaluation_nb.csv"),
        os.path.join("eval", "comparison.json"), os.path.join("eval", "comparison.csv"),
        os.path.join("eval", "comparison.svg"), os.path.join("eval", "auc.svg"),
        os.path.join("explain", "shapley.csv"), os.path.join("explain", "importance.json"),
        os.path.join("explain", "importance.svg"), os.path.join("explain", "dependence_days_to_deadline.svg"),
        os.path.join("cohorts", "cohorts.json"), os.path.join("cohorts", "cohort_bars.svg"),
        os.path.join("report", "report.json"), os.path.join("report", "report.md"),
    }
    assert expected <= set(files)
    assert not any(k.startswith(os.path.join("explain", "dependence_assignment")) for k in files)


def test_simulated_log_ingests(chain):
    configs = ingest.load_configs(open(os.path.join(chain, "log.cfg")).read())
    ds = ingest.load_dataset(open(os.path.join(chain, "log.csv")).read(), configs)
    assert len(ds) == 80


def test_evaluation_documents(chain):
    doc = json.load(open(os.path.join(chain, "eval", "evaluation_baseline.json")))
    assert doc["fold_count"] == 5 and doc["mean_auc"] == 0.5
    rf = json.load(open(os.path.join(chain, "eval", "evaluation_rf.json")))
    assert rf["mean_auc"] > 0.7
    cmp = json.load(open(os.path.join(chain, "eval", "comparison.json")))
    assert cmp["names"] == ["baseline", "nb", "rf"]
    assert cmp["pvalues"][0][0] is None


def test_predictions_one_per_bag(chain):
    lines = open(os.path.join(chain, "predictions.jsonl")).read().splitlines()
    assert len(lines) == 80
    first = json.loads(lines[0])
    assert set(first) >= {"success_probability", "advice", "advice_ids", "top_factors", "model_version"}
    report = json.load(open(os.path.join(chain, "report", "report.json")))
    assert report["students"][0] == first


def test_determinism(chain, tmp_path):
    again = run_chain(tmp_path / "again")
    assert tree_bytes(again) == tree_bytes(chain)


def test_predict_from_requests(chain, tmp_path):
    art = os.path.join(chain, "model.json")
    req = {"student_id": "x", "assignment_id": "A1", "submitted_at": "2020-03-20T10:00:00Z"}
    path = tmp_path / "req.jsonl"
    path.write_text(json.dumps(req) + "\n\n")
    out = tmp_path / "out.jsonl"
    run("predict", "--artifact", art, "--requests", path, "--out", out)
    assert json.loads(out.read_text())["n_submissions"] == 1
    late = dict(req, submitted_at="2020-03-22T00:00:00Z")
    path.write_text(json.dumps(late) + "\n")
    assert main(["predict", "--artifact", art, "--requests", str(path)]) == 1


def test_usage_errors(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main(["simulate", "--preset", "deadline_rushers", "--bogus", "1", "--out", "x"]) == 1
    assert main([]) == 1
    assert main(["--help"]) == 0


def test_invalid_input(tmp_path, capsys):
    assert main(["ingest", "--in", str(tmp_path / "missing.csv"), "--config", str(tmp_path / "x.cfg")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,log\n")
    cfg = tmp_path / "a.cfg"
    cfg.write_text("[A1]\ndeadline = 2020-03-21T00:00:00Z\nopen_date = 2020-03-01T00:00:00Z\n")
    assert main(["ingest", "--in", str(bad), "--config", str(cfg)]) == 1
    assert "error" in capsys.readouterr().err
    assert main(["train", "--in", str(bad), "--config", str(cfg), "--param", "oops", "--out", str(tmp_path / "m")]) == 1


def test_internal_error_exit_code(monkeypatch, tmp_path):
    def boom(args):
        raise RuntimeError("unexpected")

    monkeypatch.setattr(cli, "cmd_simulate", boom)
    assert main(["simulate", "--preset", "mixed", "--out", str(tmp_path / "x.csv")]) == 2


def test_serve_needs_artifact(monkeypatch):
    monkeypatch.delenv("OJPROFILE_ARTIFACT", raising=False)
    assert main(["serve"]) == 1
