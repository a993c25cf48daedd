"""Execute a pipeline definition's preprocessing stage.

Column transformers fit on the train split only and run first, in listed
order; matrix transformers (pca) then chain over the assembled matrix.
The fitted result serializes to JSON so a model can be paired with its
exact preprocessor for later scoring.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import transforms
from ..data_core import ProblemType, RawTable
from ..errors import ValidationError
from ..transforms import FittedTransformer, TransformerSpec
from .core import PipelineDefinition

PREPROCESSOR_VERSION = 1


@dataclass
class PreprocessedData:
    X_train: np.ndarray
    X_valid: np.ndarray
    y_train: np.ndarray
    y_valid: np.ndarray
    fitted: list[FittedTransformer]
    label_mapping: Optional[dict]


def _check_columns(d: PipelineDefinition, table: RawTable):
    available = set(table.column_names)
    for spec in d.transformers:
        for col in spec.select_columns or []:
            if col not in available:
                raise ValidationError(
                    f"pipeline {d.pipeline_id}: transformer references unknown column {col!r}"
                )
            if col == table.target_name:
                raise ValidationError(
                    f"pipeline {d.pipeline_id}: transformer may not touch the target column"
                )


def _select(table: RawTable, names: Sequence[str]) -> list[list]:
    index = {n: i for i, n in enumerate(table.column_names)}
    return [table.column(index[n]) for n in names]


def _encode_valid_labels(
    valid_target: list, problem: ProblemType, mapping: Optional[dict], pipeline_id: str
) -> np.ndarray:
    if not problem.is_classification:
        y, _ = transforms.encode_labels(valid_target, problem)
        return y
    out = []
    for v in valid_target:
        key = str(v)
        if key not in mapping:
            raise ValidationError(
                f"pipeline {pipeline_id}: validation label {key!r} never seen in training"
            )
        out.append(mapping[key])
    return np.array(out, dtype=int)


def execute_preprocessing(
    d: PipelineDefinition, train: RawTable, valid: RawTable
) -> PreprocessedData:
    """Fit transformers on train, apply to train and valid, encode labels."""
    _check_columns(d, train)
    problem = ProblemType(kind=d.problem_kind, n_classes=d.n_classes)

    column_specs = [s for s in d.transformers if s.kind in transforms.COLUMN_KINDS]
    matrix_specs = [s for s in d.transformers if s.kind in transforms.MATRIX_KINDS]

    fitted: list[FittedTransformer] = []
    train_blocks, valid_blocks = [], []
    for spec in column_specs:
        if not spec.select_columns:
            raise ValidationError(
                f"pipeline {d.pipeline_id}: {spec.kind} needs explicit columns"
            )
        f = transforms.fit(spec, _select(train, spec.select_columns))
        fitted.append(f)
        train_blocks.append(transforms.apply(f, _select(train, spec.select_columns)))
        valid_blocks.append(transforms.apply(f, _select(valid, spec.select_columns)))

    X_train = np.hstack(train_blocks) if train_blocks else np.zeros((train.n_rows, 0))
    X_valid = np.hstack(valid_blocks) if valid_blocks else np.zeros((valid.n_rows, 0))

    for spec in matrix_specs:
        f = transforms.fit(spec, X_train)
        fitted.append(f)
        X_train = transforms.apply(f, X_train)
        X_valid = transforms.apply(f, X_valid)

    y_train, mapping = transforms.encode_labels(train.column(train.target_index), problem)
    y_valid = _encode_valid_labels(
        valid.column(valid.target_index), problem, mapping, d.pipeline_id
    )
    return PreprocessedData(
        X_train=X_train,
        X_valid=X_valid,
        y_train=y_train,
        y_valid=y_valid,
        fitted=fitted,
        label_mapping=mapping,
    )


def preprocessor_to_dict(
    d: PipelineDefinition, fitted: list[FittedTransformer], label_mapping: Optional[dict]
) -> dict:
    return {
        "version": PREPROCESSOR_VERSION,
        "pipeline_id": d.pipeline_id,
        "problem_kind": d.problem_kind,
        "n_classes": d.n_classes,
        "transformers": [
            {
                "kind": f.spec.kind,
                "params": f.spec.params,
                "columns": f.spec.select_columns,
                "state": f.state,
                "input_arity": f.input_arity,
                "output_arity": f.output_arity,
            }
            for f in fitted
        ],
        "label_mapping": label_mapping,
    }


def preprocessor_from_dict(doc: dict) -> tuple[list[FittedTransformer], Optional[dict], dict]:
    if doc.get("version") != PREPROCESSOR_VERSION:
        raise ValidationError(f"unsupported preprocessor version {doc.get('version')!r}")
    fitted = [
        FittedTransformer(
            spec=TransformerSpec(kind=t["kind"], params=t["params"], select_columns=t["columns"]),
            state=t["state"],
            input_arity=t["input_arity"],
            output_arity=t["output_arity"],
        )
        for t in doc["transformers"]
    ]
    meta = {
        "pipeline_id": doc["pipeline_id"],
        "problem_kind": doc["problem_kind"],
        "n_classes": doc["n_classes"],
    }
    return fitted, doc.get("label_mapping"), meta


def apply_preprocessor(
    fitted: list[FittedTransformer], column_names: Sequence[str], cells: Sequence[Sequence]
) -> np.ndarray:
    """Score-time application to raw rows (no target column required)."""
    index = {n: i for i, n in enumerate(column_names)}
    n_rows = len(cells)
    blocks = []
    matrix_stage: list[FittedTransformer] = []
    for f in fitted:
        if f.spec.kind in transforms.MATRIX_KINDS:
            matrix_stage.append(f)
            continue
        cols = []
        for name in f.spec.select_columns or []:
            if name not in index:
                raise ValidationError(f"input is missing column {name!r}")
            j = index[name]
            cols.append([row[j] for row in cells])
        blocks.append(transforms.apply(f, cols))
    X = np.hstack(blocks) if blocks else np.zeros((n_rows, 0))
    for f in matrix_stage:
        X = transforms.apply(f, X)
    return X
