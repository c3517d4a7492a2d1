"""Evaluation metrics and measurement helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LabeledRun:
    """Aligned per-item scores and binary ground-truth labels."""

    scores: tuple
    labels: tuple

    def __post_init__(self):
        if len(self.scores) != len(self.labels):
            raise ValueError(
                f"scores ({len(self.scores)}) and labels ({len(self.labels)}) differ in length"
            )

    def auc(self) -> float:
        return roc_auc(self.scores, self.labels)


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via average ranks (ties share their rank).

    Equivalent to the normalised Mann-Whitney U statistic: the probability
    that a random positive outscores a random negative, counting ties half.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D sequences")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs at least one positive and one negative label")

    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts
    average_ranks = (starts + 1 + ends) / 2.0
    ranks = average_ranks[inverse]
    rank_sum = float(ranks[y == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of the least-squares line through (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 3:
        raise ValueError("need at least three points for a meaningful fit")
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float((residuals**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot
