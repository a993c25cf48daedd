"""Feature and label preprocessors.

Column transformers (impute_mean, standardize, one_hot, quantile_bin,
log_transform, tfidf) fit on raw string-or-missing columns; pca fits on an
already-numeric matrix. Fitted state is plain lists/floats so artifacts
serialize to JSON without a custom codec.
"""
from __future__ import annotations

import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .data_core import ProblemType, parse_number
from .errors import (
    ArityMismatch,
    ClampedInputWarning,
    DegenerateFitWarning,
    EmptySelection,
    NonFiniteInput,
    UnparseableRegressionTarget,
)

COLUMN_KINDS = ("impute_mean", "standardize", "one_hot", "quantile_bin", "log_transform", "tfidf")
MATRIX_KINDS = ("pca",)

ONE_HOT_MAX_CATEGORIES = 1000
OTHER_CATEGORY = "<other>"
MISSING_CATEGORY = "<missing>"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass
class TransformerSpec:
    kind: str
    params: dict = field(default_factory=dict)
    # Either a primary-type name ("numeric", "text", ...) or an explicit list.
    select_type: Optional[str] = None
    select_columns: Optional[list[str]] = None

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS + MATRIX_KINDS:
            raise ValueError(f"unknown transformer kind {self.kind!r}")
        if self.kind == "quantile_bin" and self.params.get("bins", 2) < 2:
            raise ValueError("quantile_bin requires bins >= 2")
        if self.kind == "pca" and self.params.get("k", 1) < 1:
            raise ValueError("pca requires k >= 1")
        if self.kind == "tfidf" and self.params.get("max_features", 1) < 1:
            raise ValueError("tfidf requires max_features >= 1")


@dataclass
class FittedTransformer:
    spec: TransformerSpec
    state: dict
    input_arity: int
    output_arity: int


Columns = Sequence[Sequence[Optional[str]]]


def _numeric_column(values: Sequence[Optional[str]]) -> tuple[np.ndarray, float]:
    """Parse one column; returns (values with NaN for missing, fit mean).

    All-missing (or all-unparseable) columns impute a constant 0 and warn.
    """
    parsed = np.array(
        [x if (x := parse_number(v)) is not None else np.nan for v in values], dtype=float
    )
    finite = parsed[np.isfinite(parsed)]
    if len(finite) == 0:
        warnings.warn("column has no parseable values; imputing 0", DegenerateFitWarning)
        return parsed, 0.0
    return parsed, float(finite.mean())


def _tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_RE.findall(text.lower()) if len(t) >= 2]


def fit(spec: TransformerSpec, data: Union[Columns, np.ndarray]) -> FittedTransformer:
    """Learn transformer state from train-split data.

    Column kinds take a sequence of raw columns; pca takes a numeric matrix.
    """
    if spec.kind == "pca":
        return _fit_pca(spec, np.asarray(data, dtype=float))

    columns = list(data)
    if not columns or any(len(c) == 0 for c in columns):
        raise EmptySelection(f"{spec.kind} fit received no data")
    n_in = len(columns)

    if spec.kind == "impute_mean":
        means = [_numeric_column(c)[1] for c in columns]
        return FittedTransformer(spec, {"means": means}, n_in, n_in)

    if spec.kind == "standardize":
        means, stds = [], []
        for c in columns:
            parsed, mean = _numeric_column(c)
            filled = np.where(np.isfinite(parsed), parsed, mean)
            std = float(filled.std())
            means.append(mean)
            stds.append(std if std > 0 else 1.0)
        return FittedTransformer(spec, {"means": means, "stds": stds}, n_in, n_in)

    if spec.kind == "log_transform":
        means = [_numeric_column(c)[1] for c in columns]
        return FittedTransformer(spec, {"means": means}, n_in, n_in)

    if spec.kind == "quantile_bin":
        bins = spec.params["bins"]
        means, edges = [], []
        for c in columns:
            parsed, mean = _numeric_column(c)
            finite = np.sort(parsed[np.isfinite(parsed)])
            if len(finite) == 0:
                col_edges: list[float] = []
            else:
                ranks = [
                    max(1, math.ceil(i / bins * len(finite))) - 1 for i in range(1, bins)
                ]
                col_edges = sorted({float(finite[r]) for r in ranks})
            means.append(mean)
            edges.append(col_edges)
        return FittedTransformer(spec, {"means": means, "edges": edges}, n_in, n_in)

    if spec.kind == "one_hot":
        vocabs = []
        for c in columns:
            counts = Counter(MISSING_CATEGORY if v is None else str(v) for v in c)
            top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:ONE_HOT_MAX_CATEGORIES]
            vocabs.append(sorted(k for k, _ in top))
        out = sum(len(v) + 1 for v in vocabs)
        return FittedTransformer(spec, {"vocabs": vocabs}, n_in, out)

    if spec.kind == "tfidf":
        max_features = spec.params["max_features"]
        vocabs, idfs = [], []
        for c in columns:
            docs = [_tokenize(str(v)) if v is not None else [] for v in c]
            df = Counter(tok for doc in docs for tok in set(doc))
            top = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
            vocab = sorted(k for k, _ in top)
            n_docs = len(docs)
            idf = [math.log((1 + n_docs) / (1 + df[tok])) + 1.0 for tok in vocab]
            vocabs.append(vocab)
            idfs.append(idf)
        out = sum(len(v) for v in vocabs)
        return FittedTransformer(spec, {"vocabs": vocabs, "idfs": idfs}, n_in, out)

    raise ValueError(f"unknown transformer kind {spec.kind!r}")


def _fit_pca(spec: TransformerSpec, X: np.ndarray) -> FittedTransformer:
    if X.ndim != 2 or X.shape[1] == 0 or X.shape[0] == 0:
        raise EmptySelection("pca fit received no data")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("pca input contains non-finite values")
    n_rows, n_cols = X.shape
    k = min(spec.params["k"], n_cols, n_rows)
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / n_rows
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:k]
    components = eigvecs[:, order].T  # k x d
    for i in range(k):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    state = {"mean": mean.tolist(), "components": components.tolist()}
    return FittedTransformer(spec, state, n_cols, k)


def _filled(values: Sequence[Optional[str]], mean: float) -> np.ndarray:
    parsed = np.array(
        [x if (x := parse_number(v)) is not None else np.nan for v in values], dtype=float
    )
    return np.where(np.isfinite(parsed), parsed, mean)


def apply(f: FittedTransformer, data: Union[Columns, np.ndarray]) -> np.ndarray:
    """Transform data with fitted state; output is a finite 2-D float matrix."""
    spec = f.spec
    if spec.kind == "pca":
        X = np.asarray(data, dtype=float)
        if X.ndim != 2 or X.shape[1] != f.input_arity:
            raise ArityMismatch(f"pca expects {f.input_arity} columns, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput("pca input contains non-finite values")
        components = np.array(f.state["components"])
        return (X - np.array(f.state["mean"])) @ components.T

    columns = list(data)
    if len(columns) != f.input_arity:
        raise ArityMismatch(f"{spec.kind} expects {f.input_arity} columns, got {len(columns)}")
    n_rows = len(columns[0])
    outs: list[np.ndarray] = []

    if spec.kind == "impute_mean":
        for c, mean in zip(columns, f.state["means"]):
            outs.append(_filled(c, mean)[:, None])
    elif spec.kind == "standardize":
        for c, mean, std in zip(columns, f.state["means"], f.state["stds"]):
            outs.append(((_filled(c, mean) - mean) / std)[:, None])
    elif spec.kind == "log_transform":
        for c, mean in zip(columns, f.state["means"]):
            x = _filled(c, mean)
            if np.any(x < 0):
                warnings.warn("negative values clamped to 0 before log", ClampedInputWarning)
                x = np.maximum(x, 0.0)
            outs.append(np.log1p(x)[:, None])
    elif spec.kind == "quantile_bin":
        for c, mean, edges in zip(columns, f.state["means"], f.state["edges"]):
            x = _filled(c, mean)
            outs.append(np.searchsorted(np.array(edges), x, side="left").astype(float)[:, None])
    elif spec.kind == "one_hot":
        for c, vocab in zip(columns, f.state["vocabs"]):
            index = {cat: i for i, cat in enumerate(vocab)}
            block = np.zeros((n_rows, len(vocab) + 1))
            for r, v in enumerate(c):
                key = MISSING_CATEGORY if v is None else str(v)
                block[r, index.get(key, len(vocab))] = 1.0
            outs.append(block)
    elif spec.kind == "tfidf":
        for c, vocab, idf in zip(columns, f.state["vocabs"], f.state["idfs"]):
            index = {tok: i for i, tok in enumerate(vocab)}
            block = np.zeros((n_rows, len(vocab)))
            for r, v in enumerate(c):
                if v is None:
                    continue
                for tok, count in Counter(_tokenize(str(v))).items():
                    if tok in index:
                        block[r, index[tok]] = count * idf[index[tok]]
            outs.append(block)
    else:
        raise ValueError(f"unknown transformer kind {spec.kind!r}")

    result = np.hstack(outs) if outs else np.zeros((n_rows, 0))
    if not np.all(np.isfinite(result)):
        raise NonFiniteInput(f"{spec.kind} produced non-finite output")
    return result


def encode_labels(target: Sequence, problem: ProblemType) -> tuple[np.ndarray, Optional[dict]]:
    """Encode the target column: class ids (lexicographic) or parsed floats."""
    if problem.is_classification:
        classes = sorted({str(v) for v in target})
        mapping = {c: i for i, c in enumerate(classes)}
        return np.array([mapping[str(v)] for v in target], dtype=int), mapping
    values = []
    for v in target:
        x = parse_number(v)
        if x is None:
            raise UnparseableRegressionTarget(f"cannot parse regression target {v!r}")
        values.append(x)
    return np.array(values, dtype=float), None
