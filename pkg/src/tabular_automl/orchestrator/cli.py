"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 job failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .. import learners
from ..data_core import (
    DEFAULT_VALID_FRACTION,
    drop_missing_target,
    load_csv,
    load_feature_csv,
    stratified_split,
)
from ..errors import AutomlError
from ..strategy import apply_preprocessor, builtin_portfolio, preprocessor_from_dict
from ..zeroshot import (
    DatasetHandle,
    ZeroShotConfig,
    build_performance_table,
    normalize,
    save_performance_table,
    save_portfolio,
    select_portfolio_exact,
    select_portfolio_greedy,
    selection_to_portfolio,
)
from . import artifacts, job
from .bench import BenchDataset, run_bench

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

PROBLEM_CHOICES = ["regression", "binary_classification", "multiclass_classification"]


def _add_job_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="training CSV path")
    p.add_argument("--target", help="target column name")
    p.add_argument("--output-dir", help="job directory (created if absent)")
    p.add_argument("--problem-type", choices=PROBLEM_CHOICES)
    p.add_argument("--budget", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-runtime", type=float, help="wall-clock cap in seconds")
    p.add_argument("--config", help="JSON file supplying any of the above keys")


def _load_config_file(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise AutomlError(f"{path}: config must be a JSON object")
    return doc


def _merged_job_config(args) -> job.JobConfig:
    """Defaults < --config file < explicit flags."""
    merged = {
        "input": None,
        "target": None,
        "output_dir": None,
        "problem_type": None,
        "budget": 250,
        "epsilon": 0.1,
        "parallelism": 10,
        "seed": 0,
        "max_runtime": None,
        "valid_fraction": DEFAULT_VALID_FRACTION,
        "portfolio_path": None,
    }
    if args.config:
        file_cfg = _load_config_file(args.config)
        unknown = set(file_cfg) - set(merged)
        if unknown:
            raise _UsageError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key in ("input", "target", "output_dir", "problem_type", "budget",
                "epsilon", "parallelism", "seed", "max_runtime"):
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    for key in ("input", "target", "output_dir"):
        if merged[key] is None:
            raise _UsageError(f"--{key.replace('_', '-')} is required (flag or config)")
    return job.JobConfig(
        input_path=merged["input"],
        target=merged["target"],
        output_dir=merged["output_dir"],
        problem_override=merged["problem_type"],
        budget=merged["budget"],
        epsilon=merged["epsilon"],
        parallelism=merged["parallelism"],
        seed=merged["seed"],
        max_runtime=merged["max_runtime"],
        valid_fraction=merged["valid_fraction"],
        portfolio_path=merged["portfolio_path"],
    )


class _UsageError(Exception):
    pass


def _report_exit(report: job.JobReport) -> int:
    if report.status == "failed":
        print(f"status={report.status} message={report.message}", file=sys.stderr)
        return EXIT_FAILURE
    line = f"status={report.status}"
    if report.candidates:
        line += f" candidates={len(report.candidates)}"
    if report.best is not None:
        line += (
            f" best={report.best['pipeline']}"
            f" loss={report.best['loss']:.6g} ({report.best['loss_kind']})"
        )
    print(line)
    return EXIT_OK


def cmd_analyze(args) -> int:
    return _report_exit(job.run_analyze(_merged_job_config(args)))


def cmd_generate(args) -> int:
    return _report_exit(job.run_generate(_merged_job_config(args)))


def cmd_fit(args) -> int:
    return _report_exit(job.run_fit(_merged_job_config(args)))


def cmd_rerun(args) -> int:
    cfg = _merged_job_config(args)
    return _report_exit(job.run_rerun(cfg, args.definitions))


def cmd_predict(args) -> int:
    model_path = Path(args.model)
    model_doc = artifacts.load_json(model_path)
    job_dir = model_path.parent.parent
    fitted, mapping, meta = preprocessor_from_dict(
        artifacts.load_json(job_dir / model_doc["preprocessor"])
    )
    header, cells = load_feature_csv(args.input)
    X = apply_preprocessor(fitted, header, cells)
    model = learners.model_from_dict(model_doc["model"])
    preds = learners.predict(model, X)

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        if meta["problem_kind"] == "regression":
            w.writerow(["prediction"])
            for v in preds:
                w.writerow([repr(float(v))])
        else:
            classes = sorted(mapping, key=mapping.get)
            w.writerow(["prediction"] + [f"p_{c}" for c in classes])
            for row in preds:
                label = classes[int(row.argmax())]
                w.writerow([label] + [repr(float(p)) for p in row])
    print(f"wrote {len(preds)} predictions to {out}")
    return EXIT_OK


def _manifest_datasets(doc: dict) -> list[dict]:
    datasets = doc.get("datasets")
    if not isinstance(datasets, list) or not datasets:
        raise _UsageError("config needs a non-empty 'datasets' list")
    for entry in datasets:
        for key in ("id", "path", "target"):
            if key not in entry:
                raise _UsageError(f"dataset entry missing {key!r}: {entry}")
    return datasets


def cmd_zeroshot(args) -> int:
    doc = _load_config_file(args.config)
    datasets = _manifest_datasets(doc)
    out_dir = doc.get("output_dir")
    if not out_dir:
        raise _UsageError("config needs 'output_dir'")
    k = int(doc.get("k", 5))
    solver = doc.get("solver", "greedy")
    if solver not in ("greedy", "exact"):
        raise _UsageError(f"solver must be greedy or exact, got {solver!r}")
    seed = int(doc.get("seed", 0))
    valid_fraction = float(doc.get("valid_fraction", DEFAULT_VALID_FRACTION))
    max_configs = doc.get("max_configs")

    handles = []
    for entry in datasets:
        t = load_csv(entry["path"], entry["target"])
        t, _ = drop_missing_target(t)
        problem = job._validated_problem(t, entry.get("problem_type"))
        train, valid = stratified_split(t, valid_fraction, problem, seed)
        handles.append(DatasetHandle(id=entry["id"], train=train, valid=valid))

    configs = []
    for strategy in builtin_portfolio().strategies:
        for hp in strategy.seeds:
            configs.append(ZeroShotConfig(strategy=strategy, hp=dict(hp)))
    if max_configs is not None:
        configs = configs[: int(max_configs)]

    table = normalize(build_performance_table(configs, handles, seed))
    select = select_portfolio_exact if solver == "exact" else select_portfolio_greedy
    selection = select(table, k)
    portfolio = selection_to_portfolio(table, selection)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_performance_table(table, out / "performance_table.csv")
    save_portfolio(portfolio, out / "portfolio.json")
    ids = [s.id for s in portfolio.strategies]
    print(
        f"portfolio k={len(ids)} objective={selection.objective:.6g}"
        f" solver={solver} strategies={','.join(ids)}"
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    doc = _load_config_file(args.config)
    datasets = [
        BenchDataset(
            dataset_id=e["id"],
            path=e["path"],
            target=e["target"],
            problem_override=e.get("problem_type"),
        )
        for e in _manifest_datasets(doc)
    ]
    out_dir = doc.get("output_dir")
    if not out_dir:
        raise _UsageError("config needs 'output_dir'")
    summary = run_bench(
        datasets,
        out_dir,
        budget=int(doc.get("budget", 250)),
        epsilon=float(doc.get("epsilon", 0.1)),
        parallelism=int(doc.get("parallelism", 10)),
        seed=int(doc.get("seed", 0)),
        max_runtime=doc.get("max_runtime"),
        valid_fraction=float(doc.get("valid_fraction", DEFAULT_VALID_FRACTION)),
        portfolio_path=doc.get("portfolio"),
    )
    for r in summary.results:
        if r.status == "completed":
            print(
                f"{r.dataset_id}: engine={r.engine_loss:.6g} baseline={r.baseline_loss:.6g}"
                f" red={r.relative_error_difference:+.4f} best={r.best_pipeline}"
            )
        else:
            print(f"{r.dataset_id}: FAILED {r.message}")
    mean = summary.mean_relative_error_difference
    stderr = summary.stderr_relative_error_difference
    print(
        f"success_rate={summary.success_rate:.2f}"
        f" baseline_match_rate={summary.baseline_match_rate:.2f}"
        + (f" mean_red={mean:+.4f}+-{stderr:.4f}" if mean is not None else "")
    )
    return EXIT_OK if summary.success_rate > 0 else EXIT_FAILURE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="automl",
        description="White-box AutoML for tabular CSV data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="profile the data and write a report")
    _add_job_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="analysis plus editable pipeline definitions")
    _add_job_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="full run: generate candidates, tune, train")
    _add_job_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rerun", help="re-run edited definition files verbatim")
    _add_job_flags(p)
    p.add_argument("--definitions", required=True, help="definition file or directory")
    p.set_defaults(func=cmd_rerun)

    p = sub.add_parser("predict", help="score new rows with a trained model artifact")
    p.add_argument("--model", required=True, help="models/trial_<k>.json from a fit job")
    p.add_argument("--input", required=True, help="CSV of feature rows")
    p.add_argument("--output", required=True, help="predictions CSV to write")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("zeroshot", help="build a performance table and select a portfolio")
    p.add_argument("--config", required=True, help="JSON manifest of datasets and options")
    p.set_defaults(func=cmd_zeroshot)

    p = sub.add_parser("bench", help="benchmark the engine across datasets")
    p.add_argument("--config", required=True, help="JSON manifest of datasets and options")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; remap to the documented usage code
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except AutomlError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # job failures must not escape as tracebacks
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
