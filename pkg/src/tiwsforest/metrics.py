"""Precision-recall curves and average precision for scored, labeled samples.

Equal scores are merged into one threshold group (one PR point per distinct
score value), and average precision is the raw step-wise sum
sum_i p_i (r_i - r_{i-1}) with the implicit r_0 = 0. No precision
interpolation is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NoPositivesError(ValueError):
    """Raised when an operation requires at least one positive label."""


@dataclass(frozen=True)
class PRCurve:
    """PR points at strictly decreasing thresholds; recall is non-decreasing."""

    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray

    @property
    def n_thresholds(self) -> int:
        return len(self.thresholds)

    def points(self):
        """(threshold, precision, recall) tuples in threshold order."""
        return list(zip(self.thresholds.tolist(), self.precision.tolist(),
                        self.recall.tolist()))


def _validate(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.ndim != 1:
        raise ValueError("scores and labels must be 1-D sequences")
    if scores.shape[0] != labels.shape[0]:
        raise ValueError(
            f"length mismatch: {scores.shape[0]} scores vs {labels.shape[0]} labels"
        )
    if scores.shape[0] == 0:
        raise ValueError("need at least one sample")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary (0 or 1)")
    labels = labels.astype(np.int64)
    if labels.sum() == 0:
        raise NoPositivesError("no positive labels in the data")
    return scores, labels


def pr_curve(scores, labels) -> PRCurve:
    """Cumulative precision/recall at every distinct score, descending."""
    scores, labels = _validate(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # last row of each tie group
    last = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp = np.cumsum(y)[last].astype(np.float64)
    predicted_pos = (last + 1).astype(np.float64)
    n_pos = float(labels.sum())
    return PRCurve(thresholds=s[last], precision=tp / predicted_pos,
                   recall=tp / n_pos)


def average_precision(scores, labels) -> float:
    """Step-wise average precision of the score ranking, in [0, 1]."""
    curve = pr_curve(scores, labels)
    recall_steps = np.diff(curve.recall, prepend=0.0)
    return float(np.sum(curve.precision * recall_steps))
