"""Offline portfolio optimization over a configuration-by-dataset loss table.

Given B candidate configurations evaluated on D datasets, select the k rows
minimizing sum over datasets of the best selected loss. The exact solver
enumerates k-subsets (test oracle, guarded); the greedy solver scales.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import learners
from .data_core import RawTable, compute_meta_features, infer_problem_type, profile_column
from .errors import TooLarge
from .schema import build_schema
from .strategy import (
    Strategy,
    StrategyPortfolio,
    execute_preprocessing,
    is_applicable,
    realize,
)
from .strategy.core import strategy_from_dict, strategy_to_dict

FAILURE_PENALTY = 1.5
EXACT_GUARD = 10**6


@dataclass
class ZeroShotConfig:
    """One table row: a strategy plus a concrete HP configuration."""

    strategy: Strategy
    hp: dict


@dataclass
class DatasetHandle:
    """One table column: a dataset with its held-out validation split."""

    id: str
    train: RawTable
    valid: RawTable


@dataclass
class PerformanceTable:
    losses: np.ndarray  # B x D
    configs: list[ZeroShotConfig]
    dataset_ids: list[str]
    normalization: str = "raw"

    def __post_init__(self):
        self.losses = np.asarray(self.losses, dtype=float)
        if self.losses.shape != (len(self.configs), len(self.dataset_ids)):
            raise ValueError("table shape does not match descriptors")
        if not np.all(np.isfinite(self.losses)) or np.any(self.losses < 0):
            raise ValueError("losses must be finite and non-negative")


@dataclass
class PortfolioSelection:
    indices: list[int]
    objective: float


def _analyze(handle: DatasetHandle, seed: int):
    t = handle.train
    target_col = t.column(t.target_index)
    problem = infer_problem_type(profile_column(target_col), target_col)
    feature_idx = t.feature_indices()
    profiles = [profile_column(t.column(i)) for i in feature_idx]
    names = [t.column_names[i] for i in feature_idx]
    schema = build_schema(profiles, names=names)
    mf = compute_meta_features(t, profiles, [e.primary for e in schema.entries], seed)
    return problem, schema, dict(zip(names, profiles)), mf


def _evaluate_cell(config: ZeroShotConfig, handle: DatasetHandle, analysis, seed: int) -> float:
    problem, schema, profiles, mf = analysis
    if not is_applicable(config.strategy, schema, mf):
        raise ValueError(f"strategy {config.strategy.id} not applicable to {handle.id}")
    definition = realize(config.strategy, schema, profiles, mf, problem)
    prep = execute_preprocessing(definition, handle.train, handle.valid)
    hp = definition.space.clamp(config.hp)
    model = learners.train(definition.algorithm, prep.X_train, prep.y_train, hp, seed=seed)
    preds = learners.predict(model, prep.X_valid)
    return learners.evaluate(preds, prep.y_valid, problem).value


def build_performance_table(
    configs: list[ZeroShotConfig],
    collection: list[DatasetHandle],
    seed: int,
    evaluator: Optional[Callable] = None,
) -> PerformanceTable:
    """Evaluate every configuration on every dataset.

    Failed cells never abort the table: they get 1.5x the worst finite loss
    observed in their column (1.0 when the whole column failed).
    """
    if not configs or not collection:
        raise ValueError("need at least one configuration and one dataset")
    B, D = len(configs), len(collection)
    raw = np.full((B, D), np.nan)
    analyses: dict = {}
    for j, handle in enumerate(collection):
        if evaluator is None:
            analyses[handle.id] = _analyze(handle, seed)
        for i, config in enumerate(configs):
            try:
                if evaluator is not None:
                    raw[i, j] = evaluator(config, handle, seed)
                else:
                    raw[i, j] = _evaluate_cell(config, handle, analyses[handle.id], seed)
            except Exception:
                pass  # left as NaN, penalized below

    losses = raw.copy()
    for j in range(D):
        col = raw[:, j]
        finite = col[np.isfinite(col)]
        fallback = FAILURE_PENALTY * float(finite.max()) if len(finite) else 1.0
        losses[~np.isfinite(col), j] = fallback
    return PerformanceTable(
        losses=losses, configs=configs, dataset_ids=[h.id for h in collection]
    )


def normalize(P: PerformanceTable) -> PerformanceTable:
    """Min-max scale each column to [0,1]; constant columns map to 0."""
    scaled = np.zeros_like(P.losses)
    for j in range(P.losses.shape[1]):
        col = P.losses[:, j]
        lo, hi = float(col.min()), float(col.max())
        if hi > lo:
            scaled[:, j] = (col - lo) / (hi - lo)
    return PerformanceTable(
        losses=scaled,
        configs=P.configs,
        dataset_ids=list(P.dataset_ids),
        normalization="minmax",
    )


def _objective(losses: np.ndarray, indices) -> float:
    return float(losses[list(indices), :].min(axis=0).sum())


def select_portfolio_exact(P: PerformanceTable, k: int) -> PortfolioSelection:
    """Exhaustive optimum over all k-subsets; ties break lexicographically."""
    B = len(P.configs)
    if not 1 <= k <= B:
        raise ValueError(f"k must be in [1, {B}], got {k}")
    if math.comb(B, k) > EXACT_GUARD:
        raise TooLarge(f"C({B},{k}) exceeds the enumeration guard")
    best_obj = math.inf
    best = None
    for subset in itertools.combinations(range(B), k):
        obj = _objective(P.losses, subset)
        if obj < best_obj:
            best_obj = obj
            best = subset
    return PortfolioSelection(indices=list(best), objective=best_obj)


def select_portfolio_greedy(P: PerformanceTable, k: int) -> PortfolioSelection:
    """Iteratively add the row with the largest objective decrease."""
    B = len(P.configs)
    if not 1 <= k <= B:
        raise ValueError(f"k must be in [1, {B}], got {k}")
    selected: list[int] = []
    column_best = np.full(P.losses.shape[1], np.inf)
    for _ in range(k):
        best_obj = math.inf
        best_row = None
        for i in range(B):
            if i in selected:
                continue
            obj = float(np.minimum(column_best, P.losses[i]).sum())
            if obj < best_obj:
                best_obj = obj
                best_row = i
        selected.append(best_row)
        column_best = np.minimum(column_best, P.losses[best_row])
    return PortfolioSelection(indices=selected, objective=float(column_best.sum()))


def selection_to_portfolio(P: PerformanceTable, sel: PortfolioSelection) -> StrategyPortfolio:
    """Package selected rows as a strategy portfolio for recommendation.

    Each selected row's HP config becomes the first zero-shot seed of its
    strategy copy; remaining seed slots keep the strategy's own seeds.
    """
    strategies = []
    used_ids = set()
    for rank, i in enumerate(sel.indices):
        cfg = P.configs[i]
        base = strategy_to_dict(cfg.strategy)
        new_id = cfg.strategy.id if cfg.strategy.id not in used_ids else f"{cfg.strategy.id}.{rank}"
        used_ids.add(new_id)
        base["id"] = new_id
        base["seeds"] = ([dict(cfg.hp)] + base.get("seeds", []))[:5]
        strategies.append(strategy_from_dict(base))
    return StrategyPortfolio(
        strategies=strategies,
        metadata={
            "source": "zeroshot",
            "table_hash": table_hash(P),
            "objective": sel.objective,
            "normalization": P.normalization,
        },
    )


def select_hp_seeds(P: PerformanceTable, k: int = 5) -> list[dict]:
    """Greedy k-row selection where rows are HP-only configs; returns the HPs."""
    sel = select_portfolio_greedy(P, min(k, len(P.configs)))
    return [dict(P.configs[i].hp) for i in sel.indices]


def table_hash(P: PerformanceTable) -> str:
    return hashlib.sha256(render_table_csv(P).encode("utf-8")).hexdigest()


def render_table_csv(P: PerformanceTable) -> str:
    rows = [["config"] + list(P.dataset_ids)]
    for i, cfg in enumerate(P.configs):
        rows.append([f"{i}:{cfg.strategy.id}"] + [repr(x) for x in P.losses[i].tolist()])
    return "\n".join(",".join(map(str, r)) for r in rows) + "\n"


def save_performance_table(P: PerformanceTable, csv_path) -> None:
    """CSV of losses plus a JSON sidecar with full config descriptors."""
    csv_path = Path(csv_path)
    csv_path.write_text(render_table_csv(P), encoding="utf-8")
    sidecar = {
        "normalization": P.normalization,
        "dataset_ids": list(P.dataset_ids),
        "configs": [
            {"strategy": strategy_to_dict(c.strategy), "hp": dict(c.hp)} for c in P.configs
        ],
    }
    csv_path.with_suffix(".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_performance_table(csv_path) -> PerformanceTable:
    csv_path = Path(csv_path)
    with open(csv_path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    dataset_ids = rows[0][1:]
    losses = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    sidecar = json.loads(csv_path.with_suffix(".json").read_text(encoding="utf-8"))
    configs = [
        ZeroShotConfig(strategy=strategy_from_dict(c["strategy"]), hp=dict(c["hp"]))
        for c in sidecar["configs"]
    ]
    return PerformanceTable(
        losses=losses,
        configs=configs,
        dataset_ids=dataset_ids,
        normalization=sidecar["normalization"],
    )


def save_portfolio(portfolio: StrategyPortfolio, path) -> None:
    doc = {
        "metadata": portfolio.metadata,
        "strategies": [strategy_to_dict(s) for s in portfolio.strategies],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_portfolio(path) -> StrategyPortfolio:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return StrategyPortfolio(
        strategies=[strategy_from_dict(s) for s in doc["strategies"]],
        metadata=doc.get("metadata", {}),
    )
