"""The shipped strategy portfolio.

Ten strategies spanning both algorithms and the transformer inventory.
`baseline_gbt` is deliberately degenerate (per-type defaults, default-HP
first seed): it doubles as the reference method in benchmark comparisons.
"""
from __future__ import annotations

from ..schema import ColumnType
from .core import MULTI_COLUMN, SINGLE_COLUMN, Strategy, StrategyPortfolio, StrategyRule

# First seed = the default HP configuration (subsample 1.0 makes it
# seed-independent, so a baseline model is exactly reproducible).
GBT_SEEDS = [
    {"n_trees": 100, "max_depth": 6, "learning_rate": 0.1, "min_child_rows": 1, "subsample": 1.0},
    {"n_trees": 200, "max_depth": 4, "learning_rate": 0.05, "min_child_rows": 1, "subsample": 0.8},
    {"n_trees": 50, "max_depth": 8, "learning_rate": 0.2, "min_child_rows": 1, "subsample": 1.0},
    {"n_trees": 150, "max_depth": 3, "learning_rate": 0.3, "min_child_rows": 1, "subsample": 0.9},
    {"n_trees": 80, "max_depth": 6, "learning_rate": 0.05, "min_child_rows": 1, "subsample": 0.6},
]

GBT_SHALLOW_SEEDS = [
    {"n_trees": 60, "max_depth": 3, "learning_rate": 0.3, "min_child_rows": 1, "subsample": 1.0},
    {"n_trees": 120, "max_depth": 2, "learning_rate": 0.2, "min_child_rows": 1, "subsample": 0.8},
    {"n_trees": 30, "max_depth": 4, "learning_rate": 0.5, "min_child_rows": 1, "subsample": 1.0},
    {"n_trees": 200, "max_depth": 2, "learning_rate": 0.1, "min_child_rows": 1, "subsample": 0.7},
    {"n_trees": 90, "max_depth": 3, "learning_rate": 0.15, "min_child_rows": 1, "subsample": 0.9},
]

LINEAR_SEEDS = [
    {"l2": 1e-4, "learning_rate": 0.1, "epochs": 50},
    {"l2": 1e-2, "learning_rate": 0.03, "epochs": 80},
    {"l2": 1.0, "learning_rate": 0.3, "epochs": 30},
    {"l2": 1e-6, "learning_rate": 0.01, "epochs": 100},
    {"l2": 0.1, "learning_rate": 0.1, "epochs": 20},
]


def _outlier_bin_rule() -> StrategyRule:
    return StrategyRule(
        scope=SINGLE_COLUMN,
        column_type=ColumnType.NUMERIC,
        condition={"field": "outlier_count_3sigma", "op": ">", "value": "X1"},
        action={"kind": "quantile_bin", "params": {"bins": "X2"}},
    )


def _log_skew_rule() -> StrategyRule:
    return StrategyRule(
        scope=SINGLE_COLUMN,
        column_type=ColumnType.NUMERIC,
        condition={"field": "skewness", "op": ">", "value": 2},
        action={"kind": "log_transform", "params": {}},
    )


def _bin_all_rule() -> StrategyRule:
    return StrategyRule(
        scope=SINGLE_COLUMN,
        column_type=ColumnType.NUMERIC,
        condition=None,
        action={"kind": "quantile_bin", "params": {"bins": "X2"}},
    )


def _pca_wide_rule() -> StrategyRule:
    return StrategyRule(
        scope=MULTI_COLUMN,
        condition={"field": "n_cols", "op": ">", "value": "X3"},
        action={"kind": "pca", "params": {"k": {"round_mul": ["X4", "n_cols"]}}},
    )


def _rich_text_rule() -> StrategyRule:
    return StrategyRule(
        scope=SINGLE_COLUMN,
        column_type=ColumnType.TEXT,
        condition=None,
        action={"kind": "tfidf", "params": {"max_features": 500}},
    )


def builtin_portfolio() -> StrategyPortfolio:
    strategies = [
        Strategy(id="baseline_gbt", algorithm="gbt", rules=[], seeds=GBT_SEEDS),
        Strategy(
            id="gbt_robust_numeric",
            algorithm="gbt",
            rules=[_outlier_bin_rule()],
            seeds=GBT_SEEDS,
        ),
        Strategy(id="gbt_log_skew", algorithm="gbt", rules=[_log_skew_rule()], seeds=GBT_SEEDS),
        Strategy(id="gbt_binned", algorithm="gbt", rules=[_bin_all_rule()], seeds=GBT_SEEDS),
        Strategy(id="gbt_pca_wide", algorithm="gbt", rules=[_pca_wide_rule()], seeds=GBT_SEEDS),
        Strategy(id="gbt_fast_shallow", algorithm="gbt", rules=[], seeds=GBT_SHALLOW_SEEDS),
        Strategy(id="gbt_text_focus", algorithm="gbt", rules=[_rich_text_rule()], seeds=GBT_SEEDS),
        Strategy(id="linear_standard", algorithm="linear", rules=[], seeds=LINEAR_SEEDS),
        Strategy(
            id="linear_pca_wide", algorithm="linear", rules=[_pca_wide_rule()], seeds=LINEAR_SEEDS
        ),
        Strategy(
            id="linear_text", algorithm="linear", rules=[_rich_text_rule()], seeds=LINEAR_SEEDS
        ),
    ]
    return StrategyPortfolio(strategies=strategies, metadata={"source": "builtin"})
