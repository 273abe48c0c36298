"""Subset evaluation: split the held-out dataset, fit classifiers, report.

Every (classifier, quantile level, trial) combination gets one row with
AUROC and sensitivity on the test side of a stratified split restricted to
the selected feature columns; an all-features baseline row is always
included. A chi-squared per-feature score is provided as the filter
baseline for matched-size comparisons.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .classifiers import GaussianNB, KNeighbors, LogisticRegression
from .ensemble import SelectionResult
from .exceptions import DataError, ParameterError
from .metrics import auroc, sensitivity
from .sampling import LabeledDataset, derive_seed

logger = logging.getLogger(__name__)

CLASSIFIERS = {
    "gaussian_nb": GaussianNB,
    "logistic_regression": LogisticRegression,
    "knn": KNeighbors,
}


@dataclass(frozen=True)
class EvalProtocol:
    train_fraction: float = 0.7
    split_seed: int = 0
    classifiers: tuple = ("gaussian_nb", "logistic_regression", "knn")
    trials: int = 5

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ParameterError("train_fraction must lie in (0, 1)")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        unknown = [c for c in self.classifiers if c not in CLASSIFIERS]
        if unknown:
            raise ParameterError(f"unknown classifiers {unknown}; choose from {sorted(CLASSIFIERS)}")


@dataclass
class EvalRow:
    classifier: str
    delta_quantile: float  # None marks the all-features baseline row
    trial: int
    n_features: int
    auroc: float
    sensitivity: float
    note: str = ""


@dataclass
class EvalSummary:
    classifier: str
    delta_quantile: float
    n_features: int
    auroc_mean: float
    auroc_std: float
    sensitivity_mean: float
    sensitivity_std: float
    note: str = ""


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    summaries: list = field(default_factory=list)


def stratified_split(data: LabeledDataset, protocol: EvalProtocol, seed: int = None):
    """Class-stratified row split into ((X_train, y_train), (X_test, y_test)).

    Each class contributes round(train_fraction * class size) rows to the
    training side (at least one row stays on each side). Deterministic given
    the seed, which defaults to protocol.split_seed.
    """
    if seed is None:
        seed = protocol.split_seed
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in (0, 1):
        idx = np.flatnonzero(data.y == c)
        if len(idx) < 2:
            raise DataError(f"class {c} has {len(idx)} observations; need at least 2 to split")
        n_train = int(round(protocol.train_fraction * len(idx)))
        n_train = min(max(n_train, 1), len(idx) - 1)
        perm = rng.permutation(idx)
        train_idx.append(perm[:n_train])
        test_idx.append(perm[n_train:])
    train_idx = np.concatenate(train_idx)
    test_idx = np.concatenate(test_idx)
    return (data.X[train_idx], data.y[train_idx]), (data.X[test_idx], data.y[test_idx])


def chi2_scores(data: LabeledDataset) -> np.ndarray:
    """Per-feature chi-squared score of class-wise value totals.

    Observed totals per class are compared with totals expected from the
    class frequencies; features whose values sum to zero score zero. Values
    must be non-negative (use unit-interval scaling first).
    """
    if np.any(data.X < 0):
        raise DataError("chi-squared scores need non-negative features; apply [0,1] scaling")
    totals = data.X.sum(axis=0)
    scores = np.zeros(data.n_features)
    nonzero = totals > 0
    for c in (0, 1):
        observed = data.X[data.y == c].sum(axis=0)
        expected = (np.sum(data.y == c) / data.n_rows) * totals
        scores[nonzero] += (observed[nonzero] - expected[nonzero]) ** 2 / expected[nonzero]
    return scores


def chi2_rank(data: LabeledDataset, n_select: int) -> np.ndarray:
    """Indices (ascending) of the n_select highest chi-squared scores.

    Score ties resolve to the lower feature index.
    """
    if n_select < 1:
        raise ParameterError("n_select must be positive")
    scores = chi2_scores(data)
    n_select = min(n_select, data.n_features)
    top = np.argsort(-scores, kind="stable")[:n_select]
    return np.sort(top)


def _fit_and_score(name, X_train, y_train, X_test, y_test):
    model = CLASSIFIERS[name]()
    model.fit(X_train, y_train)
    scores = model.predict_scores(X_test)
    return auroc(scores, y_test), sensitivity(scores, y_test)


def evaluate_selection(cds: LabeledDataset, selections, protocol: EvalProtocol) -> EvalReport:
    """Score each selection (plus the all-features baseline) on the held-out set.

    Trial t re-splits the rows with seed derive_seed(split_seed, t); one
    split per trial is shared by every classifier and selection. Selections
    with no features are skipped with a warning row.
    """
    report = EvalReport()
    entries = [(None, np.arange(cds.n_features))]
    for sel in selections:
        if isinstance(sel, SelectionResult):
            entries.append((sel.delta_quantile, sel.selected))
        else:
            dq, cols = sel
            entries.append((dq, np.asarray(cols, dtype=np.int64)))

    for trial in range(protocol.trials):
        (x_tr, y_tr), (x_te, y_te) = stratified_split(
            cds, protocol, seed=derive_seed(protocol.split_seed, trial)
        )
        for dq, cols in entries:
            if len(cols) == 0:
                if trial == 0:
                    logger.warning("selection at quantile %s is empty; skipping", dq)
                for name in protocol.classifiers:
                    report.rows.append(EvalRow(
                        classifier=name, delta_quantile=dq, trial=trial,
                        n_features=0, auroc=float("nan"), sensitivity=float("nan"),
                        note="empty selection; skipped",
                    ))
                continue
            for name in protocol.classifiers:
                roc, sens = _fit_and_score(name, x_tr[:, cols], y_tr, x_te[:, cols], y_te)
                report.rows.append(EvalRow(
                    classifier=name, delta_quantile=dq, trial=trial,
                    n_features=len(cols), auroc=roc, sensitivity=sens,
                ))

    for dq, cols in entries:
        for name in protocol.classifiers:
            group = [r for r in report.rows
                     if r.classifier == name and _same_quantile(r.delta_quantile, dq)]
            rocs = np.array([r.auroc for r in group])
            sens = np.array([r.sensitivity for r in group])
            if len(cols) == 0 or np.isnan(rocs).all():
                report.summaries.append(EvalSummary(
                    classifier=name, delta_quantile=dq, n_features=0,
                    auroc_mean=float("nan"), auroc_std=float("nan"),
                    sensitivity_mean=float("nan"), sensitivity_std=float("nan"),
                    note="empty selection; skipped",
                ))
                continue
            ddof = 1 if len(group) > 1 else 0
            report.summaries.append(EvalSummary(
                classifier=name, delta_quantile=dq, n_features=len(cols),
                auroc_mean=float(rocs.mean()), auroc_std=float(rocs.std(ddof=ddof)),
                sensitivity_mean=float(sens.mean()), sensitivity_std=float(sens.std(ddof=ddof)),
            ))
    return report


def _same_quantile(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return a == b
