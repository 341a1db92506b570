"""Command line entry point: ``ojprofile <command> [options]``.

Exit status is 0 on success, 1 for invalid input or usage, 2 for internal errors.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
import warnings

from . import __version__, svg
from .artifacts import PipelineArtifact, Predictor, RequestError, requests_from_records, train_pipeline
from .evaluation import EvaluationResult, comparison_matrix, cross_validate, make_folds
from .exceptions import ValidationError
from .explain import cohort_impacts, cohort_significance, explain, extract_cohorts
from .explain.cohorts import cohorts_csv
from .explain.shapley import dependence_csv
from .ingest import (
    FEATURES,
    build_bags,
    dump_configs,
    extract_features,
    features_to_csv,
    load_configs,
    load_dataset,
    parse_log,
    summarize,
    summary_to_csv,
)
from .models import MODEL_NAMES, build_model
from .persistence import dumps
from .synthgen import PRESETS, generate_csv, planted_corpus

log = logging.getLogger("ojprofile")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- helpers ----------------------------------------------------------------------


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load(args):
    configs = load_configs(_read(args.config))
    return load_dataset(_read(args.input), configs, provenance=os.path.basename(args.input)), configs


def _params(pairs):
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ValidationError(f"--param expects name=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            out[key] = json.loads(value)
        except ValueError:
            out[key] = value
    return out


def _add_data(p):
    p.add_argument("--in", dest="input", required=True, help="submission log CSV")
    p.add_argument("--config", required=True, help="assignment config file")


# -- commands ---------------------------------------------------------------------


def cmd_ingest(args):
    configs = load_configs(_read(args.config))
    records = parse_log(_read(args.input), configs)
    if not records:
        raise ValidationError("log contains no submissions")
    vectors = extract_features(records, configs)
    dataset = build_bags(vectors, configs, provenance=os.path.basename(args.input))
    _write(os.path.join(args.out_dir, "features.csv"), features_to_csv(vectors))
    _write(os.path.join(args.out_dir, "summary.csv"), summary_to_csv(summarize(dataset)))
    print(f"{len(records)} submissions, {len(dataset)} bags")


def cmd_simulate(args):
    cfg = planted_corpus(args.preset, n_students=args.students, seed=args.seed, post_success_rate=args.post_success)
    _write(args.out, generate_csv(cfg))
    config_out = args.config_out or os.path.splitext(args.out)[0] + ".cfg"
    _write(config_out, dump_configs(cfg.assignments))
    print(f"wrote {args.out} and {config_out}")


def cmd_train(args):
    dataset, configs = _load(args)
    artifact = train_pipeline(
        dataset,
        configs,
        model_name=args.model,
        seed=args.seed,
        background_size=args.background,
        cohort_leaves=args.cohort_leaves,
        normalization=args.normalization,
        retune_risk=args.retune_risk,
        **_params(args.param),
    )
    artifact.save(args.out)
    print(f"model {artifact.model_version} written to {args.out}")


def _result_stem(name):
    return f"evaluation_{name}"


def cmd_evaluate(args):
    dataset, _ = _load(args)
    folds = make_folds(dataset, k=args.folds, seed=args.seed)
    model = build_model(args.model, seed=args.seed, **_params(args.param))
    name = args.name or args.model
    result = cross_validate(model, dataset, folds, name=name, normalization=args.normalization, ties=args.ties)
    stem = os.path.join(args.out_dir, _result_stem(name))
    _write(stem + ".json", dumps(result.to_dict()))
    _write(stem + ".csv", result.to_csv())
    print(f"{name}: mean AUC {result.mean_auc:.4f} (baseline {result.baseline_auc:.4f})")


def cmd_compare(args):
    paths = sorted(glob.glob(os.path.join(args.results, "evaluation_*.json")))
    if len(paths) < 2:
        raise ValidationError(f"need at least two evaluation_*.json files in {args.results}")
    results = [EvaluationResult.from_dict(json.loads(_read(p))) for p in paths]
    matrix = comparison_matrix(results)
    out = args.out_dir or args.results
    _write(os.path.join(out, "comparison.json"), dumps(matrix.to_dict()))
    _write(os.path.join(out, "comparison.csv"), matrix.to_csv())
    _write(os.path.join(out, "comparison.svg"), svg.comparison_grid(matrix.names, matrix.pvalues))
    _write(os.path.join(out, "auc.svg"), svg.bar_auc([(r.name, r.mean_auc) for r in results]))
    print(f"compared {len(results)} models")


def _explanation(args):
    artifact = PipelineArtifact.load(args.artifact)
    dataset, _ = _load(args)
    X, y, _ = dataset.instance_matrix()
    return artifact, dataset, X, y, explain(artifact.model, artifact.scaler.transform(X), X, y, artifact.background)


def cmd_explain(args):
    _, _, _, _, ex = _explanation(args)
    out = args.out_dir
    ranking = ex.importance()
    _write(os.path.join(out, "shapley.csv"), ex.to_csv())
    _write(os.path.join(out, "importance.json"), dumps({"importance": [{"feature": f, "mean_abs_phi": v} for f, v in ranking]}))
    _write(os.path.join(out, "importance.csv"), "feature,mean_abs_phi\n" + "".join(f"{f},{v!r}\n" for f, v in ranking))
    _write(os.path.join(out, "importance.svg"), svg.importance_bar(ranking))
    for feature in args.features or FEATURES:
        rows = ex.dependence(feature)
        _write(os.path.join(out, f"dependence_{feature}.csv"), dependence_csv(rows, feature))
        _write(os.path.join(out, f"dependence_{feature}.svg"), svg.dependence_scatter(rows, feature))
    print("top feature: " + ranking[0][0])


def cmd_cohorts(args):
    dataset, _ = _load(args)
    X, y, _ = dataset.instance_matrix()
    cohorts = extract_cohorts(X, y, max_leaves=args.max_leaves, seed=args.seed)
    significance = cohort_significance(cohorts, X, y) if len(cohorts) > 1 else None
    impacts = None
    if args.artifact:
        artifact = PipelineArtifact.load(args.artifact)
        ex = explain(artifact.model, artifact.scaler.transform(X), X, y, artifact.background)
        impacts = cohort_impacts(cohorts, X, ex.phi)
        _write(os.path.join(args.out_dir, "cohort_bars.svg"), svg.cohort_bars(impacts))
    doc = {"cohorts": []}
    for i, c in enumerate(cohorts):
        entry = c.to_dict()
        mask = c.members(X)
        entry["count"] = int(mask.sum())
        entry["success_rate"] = float(y[mask].mean())
        if significance:
            entry["p_value"] = significance[i].p_value
            entry["significant"] = significance[i].significant
        if impacts:
            entry["impact"] = impacts[i].to_dict()
        doc["cohorts"].append(entry)
    _write(os.path.join(args.out_dir, "cohorts.json"), dumps(doc))
    _write(os.path.join(args.out_dir, "cohorts.csv"), cohorts_csv(cohorts, X, y, impacts, significance))
    for c in cohorts:
        print(f"{c.name}: {c.describe()}")


def _requests(args):
    if args.requests:
        out = []
        for n, line in enumerate(_read(args.requests).splitlines(), start=1):
            if line.strip():
                try:
                    out.append(json.loads(line))
                except ValueError:
                    raise ValidationError(f"line {n} of {args.requests} is not JSON") from None
        return out
    if not (args.input and args.config):
        raise ValidationError("predict needs --requests or both --in and --config")
    return requests_from_records(parse_log(_read(args.input), load_configs(_read(args.config))))


def cmd_predict(args):
    predictor = Predictor(PipelineArtifact.load(args.artifact))
    lines = []
    for i, request in enumerate(_requests(args), start=1):
        try:
            lines.append(dumps(predictor.predict(request)))
        except RequestError as exc:
            raise ValidationError(f"request {i}: {exc}") from None
    text = "".join(lines)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_report(args):
    artifact, dataset, X, y, ex = _explanation(args)
    predictor = Predictor(artifact)
    configs = artifact.configs
    records = parse_log(_read(args.input), configs)
    responses = [predictor.predict(r) for r in requests_from_records(records)]
    ranking = ex.importance()
    doc = {
        "schema_version": 1,
        "model_version": predictor.version,
        "importance": [{"feature": f, "mean_abs_phi": v} for f, v in ranking],
        "cohorts": [c.to_dict() for c in artifact.cohorts],
        "students": responses,
    }
    out = args.out_dir
    _write(os.path.join(out, "report.json"), dumps(doc))
    _write(os.path.join(out, "importance.svg"), svg.importance_bar(ranking))
    lines = [
        "# Student risk report",
        "",
        f"Model version: `{predictor.version}` ({artifact.model_name})",
        "",
        "## Feature importance",
        "",
        "| feature | mean abs Shapley |",
        "|---|---|",
    ]
    lines += [f"| {f} | {v:.4f} |" for f, v in ranking]
    lines += ["", "## Students at risk", "", "| student | assignment | success probability | advice |", "|---|---|---|---|"]
    for r in responses:
        if r["at_risk"]:
            lines.append(
                f"| {r['student_id']} | {r['assignment_id']} | {r['success_probability']:.2f} | {', '.join(r['advice_ids']) or '-'} |"
            )
    _write(os.path.join(out, "report.md"), "\n".join(lines) + "\n")
    print(f"{sum(r['at_risk'] for r in responses)} of {len(responses)} students at risk")


def cmd_serve(args):
    from .service import serve

    artifact = args.artifact or os.environ.get("OJPROFILE_ARTIFACT")
    if not artifact:
        raise ValidationError("serve needs --artifact or OJPROFILE_ARTIFACT")
    serve(artifact, host=args.host, port=args.port, sessions=args.sessions)


# -- parser -----------------------------------------------------------------------


def build_parser():
    p = _Parser(prog="ojprofile", description="Student-risk prediction from online judge submission logs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="parse a log, write descriptors and the summary table")
    _add_data(s)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("simulate", help="generate a synthetic log from a preset")
    s.add_argument("--preset", choices=PRESETS, required=True)
    s.add_argument("--students", type=int, default=200)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--post-success", type=float, default=0.0, help="chance a passing student resubmits after success")
    s.add_argument("--out", required=True, help="log CSV to write")
    s.add_argument("--config-out", help="assignment config to write (default: next to --out)")
    s.set_defaults(func=cmd_simulate)

    def model_opts(s):
        s.add_argument("--model", default="rf", choices=MODEL_NAMES)
        s.add_argument("--param", action="append", metavar="NAME=VALUE", help="model hyperparameter (repeatable)")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--normalization", choices=("zscore", "minmax"), default="zscore")

    s = sub.add_parser("train", help="fit the full pipeline and save an artifact")
    _add_data(s)
    model_opts(s)
    s.add_argument("--background", type=int, default=100, help="Shapley background size")
    s.add_argument("--cohort-leaves", type=int, default=4)
    s.add_argument("--retune-risk", action="store_true", help="use the lowest-success cohort as the risk rule")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="bag-level cross-validated AUC")
    _add_data(s)
    model_opts(s)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--ties", choices=("half", "strict"), default="half")
    s.add_argument("--name", help="result name (default: the model name)")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("compare", help="pairwise signed-rank comparison of evaluation results")
    s.add_argument("--results", required=True, help="directory holding evaluation_*.json")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("explain", help="Shapley values, importance and dependence plots")
    _add_data(s)
    s.add_argument("--artifact", required=True)
    s.add_argument("--features", nargs="*", choices=FEATURES)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_explain)

    s = sub.add_parser("cohorts", help="extract cohort rules and test them")
    _add_data(s)
    s.add_argument("--max-leaves", type=int, default=4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--artifact", help="also compute per-cohort Shapley impacts")
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_cohorts)

    s = sub.add_parser("predict", help="score requests (JSON lines) or the latest submission per student in a log")
    s.add_argument("--artifact", required=True)
    s.add_argument("--requests", help="JSON-lines request file")
    s.add_argument("--in", dest="input", help="submission log CSV")
    s.add_argument("--config")
    s.add_argument("--out", help="JSON-lines output (default stdout)")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("report", help="per-student feedback report")
    _add_data(s)
    s.add_argument("--artifact", required=True)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("serve", help="run the HTTP prediction service")
    s.add_argument("--artifact")
    s.add_argument("--host", default=os.environ.get("OJPROFILE_HOST", "127.0.0.1"))
    s.add_argument("--port", type=int, default=int(os.environ.get("OJPROFILE_PORT", "8080")))
    s.add_argument("--sessions", action="store_true", help="remember submission history per student")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings():
            if not args.verbose:
                warnings.simplefilter("ignore", RuntimeWarning)
            args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
