"""Ranking and minority-recall metrics for imbalanced evaluation."""

from __future__ import annotations

import numpy as np

from .exceptions import DataError


def _check_scores_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError("scores and labels must be 1-D and the same length")
    return scores, labels.astype(np.int64)


def auroc(scores, labels) -> float:
    """Probability a random minority score exceeds a random majority score.

    Ties count one half. Computed from midranks, which is exactly the
    normalised Mann-Whitney U statistic.
    """
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise DataError("auroc requires both classes")

    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    # Midranks: tied scores share the average of their 1-based rank range.
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1

    u = np.sum(ranks[labels == 1]) - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def sensitivity(scores, labels, cutoff: float = 0.5) -> float:
    """True positives over all minority rows at the given score cutoff.

    A row is predicted positive when its score is >= cutoff.
    """
    scores, labels = _check_scores_labels(scores, labels)
    positives = labels == 1
    n_pos = int(np.sum(positives))
    if n_pos == 0:
        raise DataError("sensitivity requires minority rows")
    tp = int(np.sum(scores[positives] >= cutoff))
    return tp / n_pos
