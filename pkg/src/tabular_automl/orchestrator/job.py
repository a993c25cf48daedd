"""Job workflow: analyze, generate candidates, fit, rerun edited definitions.

A job owns one output directory:
    report/        analysis report (JSON + Markdown)
    folds/         unprocessed train/valid CSVs
    candidates/    editable pipeline definition files
    transformed/   preprocessed matrices per pipeline
    models/        per-trial model artifacts + per-pipeline preprocessors
    leaderboard.json, trials.jsonl
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import learners, resources
from ..data_core import (
    DEFAULT_VALID_FRACTION,
    ImbalanceInfo,
    MetaFeatures,
    ProblemType,
    RawTable,
    compute_meta_features,
    detect_imbalance,
    drop_missing_target,
    infer_problem_type,
    load_csv,
    parse_number,
    profile_column,
    stratified_split,
)
from ..errors import AutomlError, WrongProblemType
from ..schema import SchemaReport, build_schema
from ..strategy import (
    PipelineDefinition,
    StrategyPortfolio,
    builtin_portfolio,
    execute_preprocessing,
    parse_definitions,
    preprocessor_to_dict,
    realize,
    recommend_strategies,
    serialize_definitions,
)
from ..tuner import Leaderboard, Trial, TunerArm, TunerConfig
from ..tuner import run as tuner_run
from ..zeroshot import load_portfolio
from . import artifacts

GENERATE_ONLY = "generate_only"
FULL = "full"


@dataclass
class JobConfig:
    input_path: str
    target: str
    output_dir: str
    problem_override: Optional[str] = None
    budget: int = 250
    epsilon: float = 0.1
    parallelism: int = 10
    seed: int = 0
    max_runtime: Optional[float] = None
    valid_fraction: float = DEFAULT_VALID_FRACTION
    portfolio_path: Optional[str] = None
    mode: str = FULL


@dataclass
class JobReport:
    status: str  # completed | generated_only | failed
    message: str = ""
    problem_kind: Optional[str] = None
    n_classes: Optional[int] = None
    n_rows: int = 0
    n_cols: int = 0
    n_dropped_rows: int = 0
    type_counts: dict = field(default_factory=dict)
    imbalance: Optional[dict] = None
    candidates: list = field(default_factory=list)
    skipped_pipelines: dict = field(default_factory=dict)
    trials_issued: int = 0
    trials_finished: int = 0
    best: Optional[dict] = None
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "message": self.message,
            "problem_kind": self.problem_kind,
            "n_classes": self.n_classes,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "n_dropped_rows": self.n_dropped_rows,
            "type_counts": self.type_counts,
            "imbalance": self.imbalance,
            "candidates": self.candidates,
            "skipped_pipelines": self.skipped_pipelines,
            "trials_issued": self.trials_issued,
            "trials_finished": self.trials_finished,
            "best": self.best,
            "timings": self.timings,
        }


@dataclass
class Analysis:
    table: RawTable
    train: RawTable
    valid: RawTable
    problem: ProblemType
    profiles: dict
    schema: SchemaReport
    mf: MetaFeatures
    imbalance: Optional[ImbalanceInfo]
    n_dropped: int


def _validated_problem(t: RawTable, override: Optional[str]) -> ProblemType:
    target = t.column(t.target_index)
    inferred = infer_problem_type(profile_column(target), target)
    if override is None:
        return inferred
    uniques = {str(v) for v in target if v is not None}
    if override == "regression":
        if any(parse_number(v) is None for v in target if v is not None):
            raise WrongProblemType("regression override but target has unparseable values")
        return ProblemType(kind="regression")
    if override == "binary_classification":
        if len(uniques) != 2:
            raise WrongProblemType(f"binary override but target has {len(uniques)} classes")
        return ProblemType(kind="binary_classification", n_classes=2)
    if override == "multiclass_classification":
        if len(uniques) < 2:
            raise WrongProblemType("multiclass override but target is constant")
        return ProblemType(kind="multiclass_classification", n_classes=len(uniques))
    raise WrongProblemType(f"unknown problem type {override!r}")


def analyze_table(
    t: RawTable, seed: int, valid_fraction: float, problem_override: Optional[str] = None
) -> Analysis:
    """The candidate-generation analysis pass over one loaded table."""
    t, n_dropped = drop_missing_target(t)
    problem = _validated_problem(t, problem_override)
    train, valid = stratified_split(t, valid_fraction, problem, seed)

    feature_idx = train.feature_indices()
    names = [train.column_names[i] for i in feature_idx]
    profile_list = [profile_column(train.column(i)) for i in feature_idx]
    schema = build_schema(profile_list, names=names)
    mf = compute_meta_features(
        train, profile_list, [e.primary for e in schema.entries], seed
    )
    imbalance = None
    if problem.kind == "binary_classification":
        imbalance = detect_imbalance(train.column(train.target_index), problem)
    return Analysis(
        table=t,
        train=train,
        valid=valid,
        problem=problem,
        profiles=dict(zip(names, profile_list)),
        schema=schema,
        mf=mf,
        imbalance=imbalance,
        n_dropped=n_dropped,
    )


def _portfolio(cfg: JobConfig) -> StrategyPortfolio:
    if cfg.portfolio_path:
        return load_portfolio(cfg.portfolio_path)
    return builtin_portfolio()


def generate_definitions(analysis: Analysis, portfolio: StrategyPortfolio) -> list[PipelineDefinition]:
    chosen = recommend_strategies(analysis.mf, analysis.schema, portfolio)
    defs = []
    for s in chosen:
        d = realize(s, analysis.schema, analysis.profiles, analysis.mf, analysis.problem)
        plan = resources.plan_for(
            d.algorithm,
            analysis.mf.n_rows,
            analysis.mf.n_cols,
            analysis.mf.density,
            space=d.space,
        )
        d.resources = plan.to_dict()
        defs.append(d)
    return defs


def _fill_analysis_report(report: JobReport, analysis: Analysis) -> None:
    report.problem_kind = analysis.problem.kind
    report.n_classes = analysis.problem.n_classes
    report.n_rows = analysis.table.n_rows
    report.n_cols = analysis.table.n_cols
    report.n_dropped_rows = analysis.n_dropped
    report.type_counts = dict(analysis.mf.type_distribution)
    if analysis.imbalance is not None:
        report.imbalance = {
            "minority_fraction": analysis.imbalance.minority_fraction,
            "is_imbalanced": analysis.imbalance.is_imbalanced,
        }


def _render_markdown(report: JobReport, analysis: Optional[Analysis]) -> str:
    lines = ["# Job report", "", f"status: **{report.status}**"]
    if report.message:
        lines.append(f"message: {report.message}")
    if analysis is not None:
        lines += [
            "",
            "## Data",
            f"- rows: {report.n_rows} (dropped for missing target: {report.n_dropped_rows})",
            f"- columns: {report.n_cols}",
            f"- problem: {report.problem_kind}"
            + (f" ({report.n_classes} classes)" if report.n_classes else ""),
            f"- column types: {report.type_counts}",
        ]
        if report.imbalance is not None:
            lines.append(
                f"- minority fraction: {report.imbalance['minority_fraction']:.3f}"
                f" (imbalanced: {report.imbalance['is_imbalanced']})"
            )
        lines += ["", "## Schema"]
        for e in analysis.schema.entries:
            lines.append(f"- `{e.name}`: {', '.join(c.value for c in e.candidates)}")
    if report.candidates:
        lines += ["", "## Candidates"] + [f"- {c}" for c in report.candidates]
    if report.best is not None:
        lines += [
            "",
            "## Best model",
            f"- pipeline: {report.best['pipeline']}",
            f"- loss: {report.best['loss']} ({report.best['loss_kind']})",
            f"- trial: {report.best['trial']}",
        ]
    return "\n".join(lines) + "\n"


def _write_report(out: Path, report: JobReport, analysis: Optional[Analysis]) -> None:
    artifacts.dump_json(report.to_dict(), out / "report" / "report.json")
    (out / "report" / "report.md").write_text(
        _render_markdown(report, analysis), encoding="utf-8"
    )


def _analysis_phase(cfg: JobConfig, report: JobReport, timings: dict) -> Analysis:
    started = time.monotonic()
    table = load_csv(cfg.input_path, cfg.target)
    timings["load_s"] = time.monotonic() - started

    started = time.monotonic()
    analysis = analyze_table(table, cfg.seed, cfg.valid_fraction, cfg.problem_override)
    timings["analyze_s"] = time.monotonic() - started
    _fill_analysis_report(report, analysis)
    return analysis


def run_analyze(cfg: JobConfig) -> JobReport:
    """Data analysis only: report, no candidates, no training."""
    out = artifacts.ensure_layout(cfg.output_dir)
    report = JobReport(status="generated_only")
    analysis = None
    try:
        analysis = _analysis_phase(cfg, report, report.timings)
    except Exception as exc:
        report.status = "failed"
        report.message = f"{type(exc).__name__}: {exc}"
    _write_report(out, report, analysis)
    return report


def run_generate(cfg: JobConfig) -> JobReport:
    """Candidate generation: analysis + folds + definition files. No training."""
    out = artifacts.ensure_layout(cfg.output_dir)
    report = JobReport(status="generated_only")
    analysis = None
    try:
        analysis = _analysis_phase(cfg, report, report.timings)
        artifacts.write_fold_csv(analysis.train, out / "folds" / "train.csv")
        artifacts.write_fold_csv(analysis.valid, out / "folds" / "valid.csv")

        started = time.monotonic()
        defs = generate_definitions(analysis, _portfolio(cfg))
        paths = serialize_definitions(defs, out / "candidates")
        report.timings["generate_s"] = time.monotonic() - started
        report.candidates = [p.name for p in paths]
    except Exception as exc:
        report.status = "failed"
        report.message = f"{type(exc).__name__}: {exc}"
    _write_report(out, report, analysis)
    return report


def _make_arm(
    d: PipelineDefinition, prep, out: Path, problem: ProblemType, weights
) -> TunerArm:
    pid = d.pipeline_id

    def runner(trial: Trial, seed: int):
        model = learners.train(
            d.algorithm, prep.X_train, prep.y_train, trial.hp, weights=weights, seed=seed
        )
        preds = learners.predict(model, prep.X_valid)
        loss = learners.evaluate(preds, prep.y_valid, problem)
        model_rel = f"models/trial_{trial.trial_id}.json"
        artifacts.dump_json(
            {
                "model": learners.model_to_dict(model),
                "hp": trial.hp,
                "pipeline": pid,
                "preprocessor": f"models/{pid}.preprocessor.json",
                "valid_loss": loss.value,
                "loss_kind": loss.kind,
            },
            out / model_rel,
        )
        return loss, {"model": model_rel, "preprocessor": f"models/{pid}.preprocessor.json"}

    return TunerArm(pipeline_id=pid, space=d.space, seeds=list(d.seeds), runner=runner)


def _fit_phase(
    cfg: JobConfig,
    out: Path,
    report: JobReport,
    analysis: Analysis,
    defs: list[PipelineDefinition],
) -> Optional[Leaderboard]:
    started = time.monotonic()
    arms = []
    for d in defs:
        try:
            prep = execute_preprocessing(d, analysis.train, analysis.valid)
        except Exception as exc:
            report.skipped_pipelines[d.pipeline_id] = f"{type(exc).__name__}: {exc}"
            continue
        tdir = out / "transformed" / d.pipeline_id
        tdir.mkdir(parents=True, exist_ok=True)
        artifacts.write_matrix_csv(
            prep.X_train, prep.y_train, analysis.train.target_name, tdir / "train.csv"
        )
        artifacts.write_matrix_csv(
            prep.X_valid, prep.y_valid, analysis.valid.target_name, tdir / "valid.csv"
        )
        artifacts.dump_json(
            preprocessor_to_dict(d, prep.fitted, prep.label_mapping),
            out / "models" / f"{d.pipeline_id}.preprocessor.json",
        )
        weights = None
        if analysis.imbalance is not None and analysis.imbalance.is_imbalanced:
            weights = learners.class_weights(prep.y_train)
        arms.append(_make_arm(d, prep, out, analysis.problem, weights))
    report.timings["preprocess_s"] = time.monotonic() - started

    if not arms:
        raise AutomlError("no pipeline survived preprocessing")

    tuner_cfg = TunerConfig(
        total_budget=cfg.budget,
        epsilon=cfg.epsilon,
        parallelism=cfg.parallelism,
        seed=cfg.seed,
        max_runtime=cfg.max_runtime,
    )
    started = time.monotonic()
    log = artifacts.TrialLog(out / "trials.jsonl")
    leaderboard, state = tuner_run(arms, tuner_cfg, log_sink=log)
    report.timings["tune_s"] = time.monotonic() - started
    report.trials_issued = state.issued
    report.trials_finished = sum(
        1 for t in state.trials.values() if t.state == "finished"
    )
    artifacts.dump_json(artifacts.leaderboard_doc(leaderboard), out / "leaderboard.json")
    best = leaderboard.best
    report.best = {
        "pipeline": best.pipeline_id,
        "trial": best.trial_id,
        "loss": best.loss,
        "loss_kind": best.loss_kind,
        "model": best.extra.get("model"),
        "preprocessor": best.extra.get("preprocessor"),
    }
    return leaderboard


def run_fit(cfg: JobConfig) -> JobReport:
    """Full job: generation then candidate exploration."""
    out = artifacts.ensure_layout(cfg.output_dir)
    report = JobReport(status="completed")
    analysis = None
    try:
        analysis = _analysis_phase(cfg, report, report.timings)
        artifacts.write_fold_csv(analysis.train, out / "folds" / "train.csv")
        artifacts.write_fold_csv(analysis.valid, out / "folds" / "valid.csv")

        started = time.monotonic()
        defs = generate_definitions(analysis, _portfolio(cfg))
        paths = serialize_definitions(defs, out / "candidates")
        report.timings["generate_s"] = time.monotonic() - started
        report.candidates = [p.name for p in paths]

        if cfg.mode == GENERATE_ONLY:
            report.status = "generated_only"
        else:
            _fit_phase(cfg, out, report, analysis, defs)
    except Exception as exc:
        report.status = "failed"
        report.message = f"{type(exc).__name__}: {exc}"
    _write_report(out, report, analysis)
    return report


def run_rerun(cfg: JobConfig, definitions_path) -> JobReport:
    """Re-run edited definitions verbatim: no recommendation, no realization."""
    out = artifacts.ensure_layout(cfg.output_dir)
    report = JobReport(status="completed")
    analysis = None
    try:
        defs = parse_definitions(definitions_path)

        analysis = _analysis_phase(cfg, report, report.timings)
        artifacts.write_fold_csv(analysis.train, out / "folds" / "train.csv")
        artifacts.write_fold_csv(analysis.valid, out / "folds" / "valid.csv")
        serialize_definitions(defs, out / "candidates")
        report.candidates = [f"{d.pipeline_id}.pipeline" for d in defs]

        _fit_phase(cfg, out, report, analysis, defs)
    except Exception as exc:
        report.status = "failed"
        report.message = f"{type(exc).__name__}: {exc}"
    _write_report(out, report, analysis)
    return report
