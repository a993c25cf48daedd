"""Strategy DSL, realization, definition files, and preprocessing execution."""
from .builtin import builtin_portfolio
from .core import (
    DEFAULT_BINDINGS,
    MULTI_COLUMN,
    SINGLE_COLUMN,
    PipelineDefinition,
    Strategy,
    StrategyPortfolio,
    StrategyRule,
    is_applicable,
    realize,
    recommend_strategies,
    strategy_from_dict,
    strategy_to_dict,
)
from .definitions import (
    parse_definition_text,
    parse_definitions,
    serialize_definition,
    serialize_definitions,
)
from .preprocess import (
    PreprocessedData,
    apply_preprocessor,
    execute_preprocessing,
    preprocessor_from_dict,
    preprocessor_to_dict,
)

__all__ = [
    "DEFAULT_BINDINGS",
    "MULTI_COLUMN",
    "SINGLE_COLUMN",
    "PipelineDefinition",
    "PreprocessedData",
    "Strategy",
    "StrategyPortfolio",
    "StrategyRule",
    "apply_preprocessor",
    "builtin_portfolio",
    "execute_preprocessing",
    "is_applicable",
    "parse_definition_text",
    "parse_definitions",
    "preprocessor_from_dict",
    "preprocessor_to_dict",
    "realize",
    "recommend_strategies",
    "serialize_definition",
    "serialize_definitions",
    "strategy_from_dict",
    "strategy_to_dict",
]
