"""Confusion-matrix metrics for scored datasets.

The decision rule is inclusive: a sample is predicted malicious when its
score is greater than or equal to the threshold. Empty denominators yield a
rate of 0 by convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamplesError, SchemaMismatchError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(scores, labels, threshold: float) -> ConfusionCounts:
    """Tally predictions (score >= threshold) against labels (1 = malicious)."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape[0] != labels.shape[0]:
        raise SchemaMismatchError("scores and labels must have equal length")
    if scores.shape[0] == 0:
        raise InsufficientSamplesError("need at least one scored sample")
    predicted = scores >= threshold
    actual = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        tn=int(np.sum(~predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
    )


def rates(counts: ConfusionCounts) -> tuple[float, float, float]:
    """(TPR, FPR, accuracy); rates are 0 when their denominator is 0."""
    positives = counts.tp + counts.fn
    negatives = counts.fp + counts.tn
    tpr = counts.tp / positives if positives else 0.0
    fpr = counts.fp / negatives if negatives else 0.0
    accuracy = (counts.tp + counts.tn) / counts.total if counts.total else 0.0
    return tpr, fpr, accuracy


def threshold_sweep(scores, labels, thresholds) -> list[tuple[float, float, float]]:
    """Per-threshold (threshold, TPR, FPR); thresholds must be ascending."""
    thresholds = [float(t) for t in thresholds]
    if any(a > b for a, b in zip(thresholds, thresholds[1:])):
        raise SchemaMismatchError("thresholds must be sorted ascending")
    out = []
    for t in thresholds:
        tpr, fpr, _ = rates(confusion(scores, labels, t))
        out.append((t, tpr, fpr))
    return out
