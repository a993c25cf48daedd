"""Validation losses: RMSE for regression, error rate (plus logloss) otherwise."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data_core import ProblemType

_EPS = 1e-15


@dataclass
class Loss:
    kind: str  # rmse | error_rate
    value: float
    logloss: Optional[float] = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"loss must be non-negative, got {self.value}")
        if self.kind == "error_rate" and not 0 <= self.value <= 1:
            raise ValueError(f"error_rate out of [0,1]: {self.value}")


def evaluate(predictions: np.ndarray, y: np.ndarray, problem: ProblemType) -> Loss:
    """Score predictions against true labels.

    Regression expects a value per row; classification expects a probability
    row per class and scores the argmax, recording logloss for tie-breaks.
    """
    predictions = np.asarray(predictions, dtype=float)
    y = np.asarray(y)
    if len(predictions) != len(y):
        raise ValueError(f"length mismatch: {len(predictions)} vs {len(y)}")

    if not problem.is_classification:
        return Loss(kind="rmse", value=float(np.sqrt(np.mean((predictions - y) ** 2))))

    if predictions.ndim != 2:
        raise ValueError("classification predictions must be (n_rows, n_classes)")
    hard = predictions.argmax(axis=1)
    error_rate = float(np.mean(hard != y))
    p_true = np.clip(predictions[np.arange(len(y)), y.astype(int)], _EPS, 1.0)
    return Loss(kind="error_rate", value=error_rate, logloss=float(-np.mean(np.log(p_true))))
