"""CSV ingestion, column profiling, meta-features, problem type, splits.

Everything in this module is pure given (input, seed); column profiling is
independent per column and safe to parallelize.
"""
from __future__ import annotations

import csv
import math
import os
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import (
    ClassTooSmallWarning,
    DegenerateTarget,
    EmptyData,
    MalformedCsv,
    MissingTarget,
    TooFewRows,
    WrongProblemType,
)

if TYPE_CHECKING:
    from .schema import ColumnType

# Cell values matching these (case-insensitive) parse as missing.
DEFAULT_MISSING_LITERALS = frozenset({"", "na", "n/a", "nan", "null"})

DEFAULT_IMBALANCE_THRESHOLD = 0.2
DEFAULT_VALID_FRACTION = 0.2

_DATE_PATTERNS = [
    re.compile(r"^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$"),
    re.compile(r"^\d{4}/\d{2}/\d{2}$"),
    re.compile(r"^\d{1,2}/\d{1,2}/\d{4}$"),
]


def parse_number(value) -> Optional[float]:
    """Parse a cell as a finite float, or None."""
    if value is None:
        return None
    try:
        x = float(value)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


@dataclass
class RawTable:
    """A loaded dataset: header, row-major string-or-missing cells, target index."""

    column_names: list[str]
    cells: list[list[Optional[str]]]
    target_index: int
    size_bytes: Optional[int] = None

    def __post_init__(self):
        if len(set(self.column_names)) != len(self.column_names):
            raise MalformedCsv("duplicate column names in header")
        if not 0 <= self.target_index < self.n_cols:
            raise ValueError(f"target_index {self.target_index} out of range")
        if self.n_rows < 1:
            raise EmptyData("table has no data rows")
        for i, row in enumerate(self.cells):
            if len(row) != self.n_cols:
                raise MalformedCsv(f"row {i + 1} has {len(row)} cells, expected {self.n_cols}")

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.column_names)

    @property
    def target_name(self) -> str:
        return self.column_names[self.target_index]

    def column(self, index: int) -> list[Optional[str]]:
        return [row[index] for row in self.cells]

    def feature_indices(self) -> list[int]:
        return [i for i in range(self.n_cols) if i != self.target_index]

    def subset(self, row_indices: Sequence[int]) -> "RawTable":
        return RawTable(
            column_names=list(self.column_names),
            cells=[self.cells[i] for i in row_indices],
            target_index=self.target_index,
        )


def _read_csv_cells(path, missing_literals) -> tuple[list[str], list[list[Optional[str]]]]:
    lowered = {m.lower() for m in missing_literals}
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f, strict=True)
            try:
                header = next(reader)
            except StopIteration:
                raise EmptyData(f"{path}: file is empty")
            rows = list(reader)
    except csv.Error as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc
    if not rows:
        raise EmptyData(f"{path}: no data rows")

    n_cols = len(header)
    cells: list[list[Optional[str]]] = []
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise MalformedCsv(f"{path}: row {i + 2} has {len(row)} fields, expected {n_cols}")
        cells.append([None if c.lower() in lowered else c for c in row])
    return header, cells


def load_csv(path, target_name: str, missing_literals=DEFAULT_MISSING_LITERALS) -> RawTable:
    """Load an RFC-4180 CSV with a mandatory header row.

    Empty strings and the configured literal set (case-insensitive) become
    missing cells. Ragged rows and broken quoting raise MalformedCsv.
    """
    header, cells = _read_csv_cells(path, missing_literals)
    if target_name not in header:
        raise MissingTarget(f"target column {target_name!r} not in header {header}")
    return RawTable(
        column_names=header,
        cells=cells,
        target_index=header.index(target_name),
        size_bytes=os.path.getsize(path),
    )


def load_feature_csv(
    path, missing_literals=DEFAULT_MISSING_LITERALS
) -> tuple[list[str], list[list[Optional[str]]]]:
    """Load a CSV for scoring: header plus normalized cells, no target required."""
    return _read_csv_cells(path, missing_literals)


def drop_missing_target(t: RawTable) -> tuple[RawTable, int]:
    """Remove rows whose target cell is missing. Labels are mandatory downstream."""
    keep = [i for i, row in enumerate(t.cells) if row[t.target_index] is not None]
    if len(keep) == t.n_rows:
        return t, 0
    if not keep:
        raise EmptyData("every row has a missing target value")
    out = t.subset(keep)
    out.size_bytes = t.size_bytes
    return out, t.n_rows - len(keep)


@dataclass
class ColumnProfile:
    """Per-column statistics over non-missing entries.

    Numeric statistics cover the entries that parse as finite numbers and are
    None when no entry parses. std_dev uses the population formula; skewness
    is the standardized third moment, defined as 0 when std_dev is 0.
    """

    missing_fraction: float
    numeric_parse_fraction: float
    n_unique: int
    percentiles: Optional[dict[str, float]]
    mean: Optional[float]
    std_dev: Optional[float]
    skewness: Optional[float]
    mean_token_count: float
    alpha_token_fraction: float
    outlier_count_3sigma: int
    datetime_parse_fraction: float = 0.0
    n_values: int = 0


def _nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    rank = max(1, math.ceil(p / 100.0 * len(sorted_values)))
    return float(sorted_values[rank - 1])


def profile_column(values: Sequence) -> ColumnProfile:
    """Profile one column of string-or-missing cells."""
    n = len(values)
    if n == 0:
        raise ValueError("cannot profile an empty column")
    present = [v for v in values if v is not None]
    n_present = len(present)
    missing_fraction = 1.0 - n_present / n

    numeric = np.array([x for x in (parse_number(v) for v in present) if x is not None])
    numeric_parse_fraction = len(numeric) / n_present if n_present else 0.0

    n_unique = len({str(v) for v in present})

    percentiles = mean = std_dev = skewness = None
    outliers = 0
    if len(numeric):
        s = np.sort(numeric)
        percentiles = {f"p{p}": _nearest_rank(s, p) for p in (1, 25, 50, 75, 99)}
        mean = float(numeric.mean())
        std_dev = float(numeric.std())  # population
        if std_dev > 0:
            skewness = float(((numeric - mean) ** 3).mean() / std_dev**3)
            outliers = int(np.sum(np.abs(numeric - mean) > 3 * std_dev))
        else:
            skewness = 0.0

    tokens_per_value = [str(v).split() for v in present]
    all_tokens = [tok for toks in tokens_per_value for tok in toks]
    mean_token_count = len(all_tokens) / n_present if n_present else 0.0
    alpha_token_fraction = (
        sum(1 for tok in all_tokens if tok.isalpha()) / len(all_tokens) if all_tokens else 0.0
    )

    dt_hits = sum(1 for v in present if any(p.match(str(v)) for p in _DATE_PATTERNS))
    datetime_parse_fraction = dt_hits / n_present if n_present else 0.0

    return ColumnProfile(
        missing_fraction=missing_fraction,
        numeric_parse_fraction=numeric_parse_fraction,
        n_unique=n_unique,
        percentiles=percentiles,
        mean=mean,
        std_dev=std_dev,
        skewness=skewness,
        mean_token_count=mean_token_count,
        alpha_token_fraction=alpha_token_fraction,
        outlier_count_3sigma=outliers,
        datetime_parse_fraction=datetime_parse_fraction,
        n_values=n,
    )


@dataclass
class ProblemType:
    kind: str  # regression | binary_classification | multiclass_classification
    n_classes: Optional[int] = None

    @property
    def is_classification(self) -> bool:
        return self.kind != "regression"


def infer_problem_type(target_profile: ColumnProfile, target_values: Sequence) -> ProblemType:
    """Classify the prediction problem from the target column.

    Non-numeric targets are categorical. Numeric targets with at most 20
    unique, all-integral values are treated as class labels; anything else
    is regression.
    """
    present = [v for v in target_values if v is not None]
    uniques = {str(v) for v in present}
    if len(uniques) <= 1:
        raise DegenerateTarget("target column has a single unique value")

    parsed = [parse_number(v) for v in present]
    all_numeric = all(x is not None for x in parsed)
    if all_numeric:
        all_integral = all(float(x).is_integer() for x in parsed)
        if not (all_integral and len(uniques) <= 20):
            return ProblemType(kind="regression")

    n_classes = len(uniques)
    kind = "binary_classification" if n_classes == 2 else "multiclass_classification"
    return ProblemType(kind=kind, n_classes=n_classes)


def _regression_strata(target_values: Sequence[str]) -> list[str]:
    """Decile-of-target group labels for regression stratification."""
    parsed = [parse_number(v) for v in target_values]
    finite = np.array([x for x in parsed if x is not None])
    if len(finite) == 0:
        return ["<bin unparseable>"] * len(target_values)
    s = np.sort(finite)
    edges = sorted({_nearest_rank(s, p) for p in range(10, 100, 10)})
    labels = []
    for x in parsed:
        if x is None:
            labels.append("<bin unparseable>")
        else:
            labels.append(f"<bin {int(np.searchsorted(edges, x, side='left'))}>")
    return labels


def stratified_split(
    t: RawTable, valid_fraction: float, problem: ProblemType, seed: int
) -> tuple[RawTable, RawTable]:
    """Partition rows into (train, valid), stratified by class or target decile.

    Classification classes with a single member go entirely to train with a
    ClassTooSmallWarning. Deterministic given seed.
    """
    if not 0 < valid_fraction < 1:
        raise ValueError(f"valid_fraction must be in (0,1), got {valid_fraction}")
    if t.n_rows < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {t.n_rows}")

    target = t.column(t.target_index)
    if problem.is_classification:
        strata = [str(v) for v in target]
    else:
        strata = _regression_strata(target)

    groups: dict[str, list[int]] = {}
    for i, g in enumerate(strata):
        groups.setdefault(g, []).append(i)

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    valid_idx: list[int] = []
    for g in sorted(groups):
        idx = groups[g]
        if len(idx) == 1 and problem.is_classification:
            warnings.warn(
                f"class {g!r} has a single row; keeping it in train", ClassTooSmallWarning
            )
            continue
        k = int(math.floor(valid_fraction * len(idx) + 0.5))
        order = rng.permutation(len(idx))
        valid_idx.extend(idx[j] for j in order[:k])

    valid_set = set(valid_idx)
    train_idx = [i for i in range(t.n_rows) if i not in valid_set]
    return t.subset(train_idx), t.subset(sorted(valid_set))


@dataclass
class ImbalanceInfo:
    minority_fraction: float
    is_imbalanced: bool


def detect_imbalance(
    target_values: Sequence, problem: ProblemType, threshold: float = DEFAULT_IMBALANCE_THRESHOLD
) -> ImbalanceInfo:
    """Flag binary datasets whose minority class share is below threshold (strict)."""
    if problem.kind != "binary_classification":
        raise WrongProblemType(f"imbalance is defined for binary classification, not {problem.kind}")
    counts = Counter(str(v) for v in target_values if v is not None)
    minority = min(counts.values())
    fraction = minority / sum(counts.values())
    return ImbalanceInfo(minority_fraction=fraction, is_imbalanced=fraction < threshold)


@dataclass
class MetaFeatures:
    """Whole-dataset statistics used to gate and guide strategy selection."""

    n_rows: int
    n_cols: int
    type_distribution: dict[str, int]
    landmark_score: float
    target_correlations: dict[str, float]
    size_bytes: int
    density: float


def _estimate_size_bytes(t: RawTable) -> int:
    total = sum(len(name.encode("utf-8")) for name in t.column_names) + t.n_cols
    for row in t.cells:
        total += sum(len(c.encode("utf-8")) if c is not None else 0 for c in row) + t.n_cols
    return total


def _constant_predictor_loss(y: np.ndarray, problem: ProblemType) -> float:
    if problem.is_classification:
        _, counts = np.unique(y, return_counts=True)
        return 1.0 - counts.max() / len(y)
    return float(np.sqrt(np.mean((y - y.mean()) ** 2)))


def _landmark_score(t: RawTable, types: Sequence["ColumnType"], seed: int) -> float:
    """Validation loss of a depth-3 single-tree baseline on a seeded subsample."""
    from . import learners
    from .schema import ColumnType
    from .transforms import encode_labels

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(101,)))
    n_sub = min(t.n_rows, 1000)
    sub_idx = sorted(rng.choice(t.n_rows, size=n_sub, replace=False).tolist())
    sub = t.subset(sub_idx)

    target = sub.column(sub.target_index)
    problem = infer_problem_type(profile_column(target), target)
    y, _ = encode_labels(target, problem)

    numeric_cols = [
        idx
        for idx, ctype in zip(t.feature_indices(), types)
        if ctype == ColumnType.NUMERIC
    ]
    n_eval = max(1, n_sub // 4)
    order = rng.permutation(n_sub)
    fit_rows, eval_rows = order[n_eval:], order[:n_eval]

    if not numeric_cols:
        return _constant_predictor_loss(y[eval_rows], problem)

    X = np.zeros((n_sub, len(numeric_cols)))
    for j, idx in enumerate(numeric_cols):
        col = [parse_number(v) for v in sub.column(idx)]
        finite = [x for x in col if x is not None]
        fill = float(np.mean(finite)) if finite else 0.0
        X[:, j] = [x if x is not None else fill for x in col]

    hp = {
        "n_trees": 1,
        "max_depth": 3,
        "learning_rate": 1.0,
        "min_child_rows": 1,
        "subsample": 1.0,
    }
    try:
        model = learners.train("gbt", X[fit_rows], y[fit_rows], hp, seed=seed)
        preds = learners.predict(model, X[eval_rows])
    except Exception:
        return _constant_predictor_loss(y[eval_rows], problem)
    return learners.evaluate(preds, y[eval_rows], problem).value


def compute_meta_features(
    t: RawTable, profiles: Sequence[ColumnProfile], types: Sequence["ColumnType"], seed: int
) -> MetaFeatures:
    """Dataset-level statistics. `profiles`/`types` align with t's feature columns.

    Deterministic given seed; the landmark score comes from a fixed shallow
    tree trained on a seeded subsample of at most 1000 rows.
    """
    feature_idx = t.feature_indices()
    if len(profiles) != len(feature_idx) or len(types) != len(feature_idx):
        raise ValueError("profiles/types must align with the table's feature columns")

    type_distribution = dict(Counter(ct.value for ct in types))

    n_cells = t.n_rows * t.n_cols
    present = sum(1 for row in t.cells for c in row if c is not None)
    density = present / n_cells if n_cells else 0.0

    target = t.column(t.target_index)
    target_problem = infer_problem_type(profile_column(target), target)
    from .schema import ColumnType
    from .transforms import encode_labels

    y, _ = encode_labels(target, target_problem)
    correlations: dict[str, float] = {}
    for idx, ctype in zip(feature_idx, types):
        if ctype != ColumnType.NUMERIC:
            continue
        col = [parse_number(v) for v in t.column(idx)]
        pairs = [(x, yy) for x, yy in zip(col, y) if x is not None]
        if len(pairs) < 2:
            correlations[t.column_names[idx]] = 0.0
            continue
        xs = np.array([p[0] for p in pairs])
        ys = np.array([p[1] for p in pairs])
        if xs.std() == 0 or ys.std() == 0:
            correlations[t.column_names[idx]] = 0.0
        else:
            correlations[t.column_names[idx]] = float(abs(np.corrcoef(xs, ys)[0, 1]))

    return MetaFeatures(
        n_rows=t.n_rows,
        n_cols=t.n_cols,
        type_distribution=type_distribution,
        landmark_score=_landmark_score(t, types, seed),
        target_correlations=correlations,
        size_bytes=t.size_bytes if t.size_bytes is not None else _estimate_size_bytes(t),
        density=density,
    )
