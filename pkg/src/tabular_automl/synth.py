"""Seeded synthetic CSV generators for tests, benchmarks, and calibration.

Each generator writes an RFC-4180 CSV with a learnable signal plus realistic
irritants (missing cells, outliers, skew, free text) and returns the target
column name.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

_WORDS = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima "
    "mike november oscar papa quebec romeo sierra tango uniform victor whiskey "
    "xray yankee zulu"
).split()


def _writer(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def make_regression_csv(path, n_rows: int = 1200, seed: int = 0) -> str:
    """Numeric regression with skewed and outlier-laden feature columns."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(0, 1, n_rows)
    x2 = rng.lognormal(0, 1.2, n_rows)  # heavy right skew
    x3 = rng.normal(5, 2, n_rows)
    x3[rng.random(n_rows) < 0.02] += 40  # rare large outliers
    x4 = rng.uniform(-1, 1, n_rows)
    noise = rng.normal(0, 0.5, n_rows)
    y = 3.0 * x1 - 2.0 * np.log1p(x2) + 0.8 * x3 + 4.0 * np.sin(3 * x4) + noise

    target = "response"
    with open(_writer(path), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["signal", "skewed", "spiky", "wave", target])
        for i in range(n_rows):
            row = [_fmt(x1[i]), _fmt(x2[i]), _fmt(x3[i]), _fmt(x4[i]), _fmt(y[i])]
            if rng.random() < 0.01:
                row[0] = ""  # sprinkle missing cells
            w.writerow(row)
    return target


def make_imbalanced_csv(path, n_rows: int = 3200, seed: int = 1) -> str:
    """Binary classification, ~12% positives, with categorical and text columns."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(0, 1, n_rows)
    x2 = rng.normal(0, 1, n_rows)
    segment = rng.choice(["retail", "pro", "enterprise", "edu"], n_rows, p=[0.5, 0.25, 0.15, 0.1])
    seg_effect = {"retail": -0.7, "pro": 0.5, "enterprise": 1.4, "edu": -0.3}
    logit = -4.4 + 2.4 * x1 - 1.6 * x2 + np.array([seg_effect[s] for s in segment])
    # a text column whose keywords carry signal
    notes, keyword_boost = [], np.zeros(n_rows)
    for i in range(n_rows):
        pool = list(rng.choice(_WORDS, size=int(rng.integers(3, 8))))
        if rng.random() < 0.3:
            pool.append("urgent escalation")
            keyword_boost[i] = 2.2
        notes.append(" ".join(pool))
    p = 1 / (1 + np.exp(-(logit + keyword_boost)))
    y = (rng.random(n_rows) < p).astype(int)

    target = "churned"
    with open(_writer(path), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["usage", "tenure", "segment", "notes", target])
        for i in range(n_rows):
            seg = segment[i] if rng.random() > 0.02 else "NA"
            w.writerow([_fmt(x1[i]), _fmt(x2[i]), seg, notes[i], str(int(y[i]))])
    return target


def make_multiclass_csv(path, n_rows: int = 1500, seed: int = 2) -> str:
    """Five-class problem driven by two numerics and one categorical."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(0, 1, n_rows)
    x2 = rng.normal(0, 1, n_rows)
    region = rng.choice(["north", "south", "east", "west"], n_rows)
    region_shift = {"north": 0.0, "south": 1.0, "east": 2.0, "west": 3.0}
    score = 2.0 * x1 + 1.5 * x2 + np.array([region_shift[r] for r in region])
    score += rng.normal(0, 0.6, n_rows)
    edges = np.quantile(score, [0.2, 0.4, 0.6, 0.8])
    labels = np.searchsorted(edges, score)
    names = ["seed", "sprout", "sapling", "tree", "grove"]

    target = "stage"
    with open(_writer(path), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["growth", "light", "region", target])
        for i in range(n_rows):
            w.writerow([_fmt(x1[i]), _fmt(x2[i]), region[i], names[int(labels[i])]])
    return target


def make_sized_csv(path, n_rows: int, n_cols: int, seed: int = 0) -> str:
    """Plain numeric table of a given shape (memory calibration grids)."""
    rng = np.random.default_rng(seed)
    X = rng.normal(0, 1, (n_rows, n_cols))
    y = X[:, 0] + rng.normal(0, 0.1, n_rows)
    target = "y"
    with open(_writer(path), "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow([f"f{j}" for j in range(n_cols)] + [target])
        for i in range(n_rows):
            w.writerow([_fmt(v) for v in X[i]] + [_fmt(y[i])])
    return target
