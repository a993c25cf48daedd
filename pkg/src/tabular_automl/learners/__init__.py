"""Built-in algorithms, their search spaces, and loss evaluation."""
from __future__ import annotations

from typing import Optional, Union

import numpy as np

from .gbt import GbtModel, predict_gbt, train_gbt
from .linear import LinearModel, loss_and_grad, predict_linear, train_linear
from .metrics import Loss, evaluate
from .spaces import HpDomain, HpSpace, default_hp_space

ALGORITHMS = ("gbt", "linear")

Model = Union[GbtModel, LinearModel]


def train(
    algorithm: str,
    X: np.ndarray,
    y: np.ndarray,
    hp: dict,
    weights: Optional[np.ndarray] = None,
    seed: int = 0,
) -> Model:
    if algorithm == "gbt":
        return train_gbt(X, y, hp, weights=weights, seed=seed)
    if algorithm == "linear":
        return train_linear(X, y, hp, weights=weights, seed=seed)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def predict(model: Model, X: np.ndarray) -> np.ndarray:
    if isinstance(model, GbtModel):
        return predict_gbt(model, X)
    if isinstance(model, LinearModel):
        return predict_linear(model, X)
    raise TypeError(f"not a model: {type(model).__name__}")


def model_to_dict(model: Model) -> dict:
    return model.to_dict()


def model_from_dict(d: dict) -> Model:
    if d.get("algorithm") == "gbt":
        return GbtModel.from_dict(d)
    if d.get("algorithm") == "linear":
        return LinearModel.from_dict(d)
    raise ValueError(f"unknown algorithm in model dict: {d.get('algorithm')!r}")


def class_weights(y: np.ndarray) -> np.ndarray:
    """Inverse-frequency per-row weights, normalized to mean 1."""
    y = np.asarray(y)
    _, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    w = (len(y) / (len(counts) * counts))[inverse]
    return w * (len(y) / w.sum())


__all__ = [
    "ALGORITHMS",
    "GbtModel",
    "HpDomain",
    "HpSpace",
    "LinearModel",
    "Loss",
    "class_weights",
    "default_hp_space",
    "evaluate",
    "loss_and_grad",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "train",
]
