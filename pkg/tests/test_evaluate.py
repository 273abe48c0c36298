"""Stratified splitting, the chi-squared filter, and the report builder."""

import numpy as np
import pytest

from refsel import (
    EvalProtocol,
    LabeledDataset,
    chi2_rank,
    chi2_scores,
    evaluate_selection,
    make_planted_dataset,
    select_features,
    stratified_split,
)
from refsel.exceptions import DataError, ParameterError


def dataset(n_majority, n_minority, n_features=2, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, size=(n_majority + n_minority, n_features))
    y = np.r_[np.zeros(n_majority, dtype=int), np.ones(n_minority, dtype=int)]
    return LabeledDataset(X=x, y=y)


# ---------------------------------------------------------------------------
# stratified_split

def test_split_counts_70_30():
    (x_tr, y_tr), (x_te, y_te) = stratified_split(dataset(100, 10), EvalProtocol(split_seed=3))
    assert int(np.sum(y_tr == 0)) == 70 and int(np.sum(y_tr == 1)) == 7
    assert int(np.sum(y_te == 0)) == 30 and int(np.sum(y_te == 1)) == 3
    assert x_tr.shape[0] == 77 and x_te.shape[0] == 33


def test_split_deterministic():
    data = dataset(50, 8)
    p = EvalProtocol(split_seed=11)
    (a_tr, _), _ = stratified_split(data, p)
    (b_tr, _), _ = stratified_split(data, p)
    assert np.array_equal(a_tr, b_tr)
    (c_tr, _), _ = stratified_split(data, p, seed=999)
    assert not np.array_equal(a_tr, c_tr)


def test_split_preserves_proportions_large():
    data = dataset(9000, 1000)
    (x_tr, y_tr), _ = stratified_split(data, EvalProtocol(split_seed=5))
    assert abs(np.mean(y_tr) - 0.1) < 0.01


def test_split_small_class_raises():
    x = np.zeros((5, 2))
    y = np.array([0, 0, 0, 0, 1])
    data = LabeledDataset(X=x, y=y)
    with pytest.raises(DataError, match="at least 2"):
        stratified_split(data, EvalProtocol())


def test_protocol_validation():
    with pytest.raises(ParameterError):
        EvalProtocol(train_fraction=1.0)
    with pytest.raises(ParameterError):
        EvalProtocol(trials=0)
    with pytest.raises(ParameterError):
        EvalProtocol(classifiers=("svm",))


# ---------------------------------------------------------------------------
# chi-squared filter

def test_chi2_identical_feature_scores_zero():
    x = np.column_stack([np.full(10, 0.4), np.r_[np.zeros(7), np.ones(3)]])
    y = np.r_[np.zeros(7, dtype=int), np.ones(3, dtype=int)]
    scores = chi2_scores(LabeledDataset(X=x, y=y))
    assert scores[0] == pytest.approx(0.0, abs=1e-12)
    assert scores[1] > 0.0


def test_chi2_minority_only_feature_ranks_above_constant():
    x = np.zeros((12, 3))
    x[:, 0] = 0.5                      # constant everywhere
    x[-3:, 1] = 1.0                    # nonzero only in minority
    y = np.r_[np.zeros(9, dtype=int), np.ones(3, dtype=int)]
    data = LabeledDataset(X=x, y=y)
    scores = chi2_scores(data)
    assert scores[1] > scores[0]
    assert chi2_rank(data, 1).tolist() == [1]


def test_chi2_three_feature_hand_oracle():
    x = np.array([
        [1.0, 0.0, 2.0],
        [2.0, 1.0, 2.0],
        [3.0, 0.0, 2.0],
        [0.0, 4.0, 2.0],
        [1.0, 3.0, 2.0],
    ])
    y = np.array([0, 0, 0, 1, 1])
    scores = chi2_scores(LabeledDataset(X=x, y=y))
    for j in range(3):
        total = x[:, j].sum()
        expected_score = 0.0
        for c in (0, 1):
            observed = x[y == c, j].sum()
            expected = (np.sum(y == c) / 5) * total
            if total > 0:
                expected_score += (observed - expected) ** 2 / expected
        assert scores[j] == pytest.approx(expected_score, rel=1e-12)


def test_chi2_zero_total_feature_scores_zero():
    x = np.zeros((6, 2))
    x[:, 1] = np.r_[np.zeros(4), np.ones(2)]
    y = np.r_[np.zeros(4, dtype=int), np.ones(2, dtype=int)]
    assert chi2_scores(LabeledDataset(X=x, y=y))[0] == 0.0


def test_chi2_rejects_negative_values():
    x = np.array([[0.5, -0.1]] * 3 + [[0.2, 0.3]])
    y = np.array([0, 0, 0, 1])
    with pytest.raises(DataError, match="scaling"):
        chi2_scores(LabeledDataset(X=x, y=y))


def test_chi2_rank_size_and_tie_break():
    x = np.zeros((8, 4))
    x[-2:, 1] = 1.0
    x[-2:, 3] = 1.0  # same score as feature 1: tie resolves to lower index first
    y = np.r_[np.zeros(6, dtype=int), np.ones(2, dtype=int)]
    data = LabeledDataset(X=x, y=y)
    assert chi2_rank(data, 1).tolist() == [1]
    assert chi2_rank(data, 10).tolist() == [0, 1, 2, 3]
    with pytest.raises(ParameterError):
        chi2_rank(data, 0)


def test_chi2_invariant_under_row_permutation():
    data, _ = make_planted_dataset(60, 12, 8, n_planted=2, shift=1.5, seed=9)
    shifted = LabeledDataset(X=data.X - data.X.min(), y=data.y)
    perm = np.random.default_rng(10).permutation(shifted.n_rows)
    permuted = LabeledDataset(X=shifted.X[perm], y=shifted.y[perm])
    assert np.allclose(chi2_scores(shifted), chi2_scores(permuted))


# ---------------------------------------------------------------------------
# evaluate_selection

def planted_cds(seed=21, n_features=20):
    data, planted = make_planted_dataset(300, 40, n_features, n_planted=4, shift=2.5, seed=seed)
    lo, hi = data.X.min(axis=0), data.X.max(axis=0)
    scaled = LabeledDataset(X=(data.X - lo) / (hi - lo), y=data.y)
    return scaled, planted


def test_full_selection_equals_baseline_rows():
    cds, _ = planted_cds()
    full = select_features(np.arange(20, dtype=float), 0.0)
    full = type(full)(delta=full.delta, delta_quantile=0.0, threshold=-1.0,
                      selected=np.arange(20))
    protocol = EvalProtocol(trials=2, split_seed=7, classifiers=("gaussian_nb",))
    report = evaluate_selection(cds, [full], protocol)
    baseline = {r.trial: r for r in report.rows if r.delta_quantile is None}
    selected = {r.trial: r for r in report.rows if r.delta_quantile == 0.0}
    for trial in baseline:
        assert baseline[trial].auroc == selected[trial].auroc
        assert baseline[trial].sensitivity == selected[trial].sensitivity
        assert selected[trial].n_features == 20


def test_empty_selection_yields_warning_rows():
    cds, _ = planted_cds()
    empty = select_features(np.zeros(20), 0.5)
    assert empty.n_selected == 0
    protocol = EvalProtocol(trials=2, split_seed=7, classifiers=("gaussian_nb", "knn"))
    report = evaluate_selection(cds, [empty], protocol)
    skipped = [r for r in report.rows if r.delta_quantile == 0.5]
    assert len(skipped) == 4  # two classifiers x two trials
    assert all(np.isnan(r.auroc) and r.note for r in skipped)
    summary = [s for s in report.summaries if s.delta_quantile == 0.5]
    assert all("empty" in s.note for s in summary)
    # Baseline rows still carry numbers.
    assert all(np.isfinite(r.auroc) for r in report.rows if r.delta_quantile is None)


def test_evaluate_deterministic_and_planted_close_to_baseline():
    # With 4 informative features out of 40, the 0.9 quantile of a 0/1 delta
    # vector thresholds between the blocks, selecting exactly the plant.
    cds, planted = planted_cds(n_features=40)
    selection = select_features(
        np.where(np.isin(np.arange(40), planted), 1.0, 0.0), 0.9
    )
    assert set(selection.selected.tolist()) == set(planted.tolist())
    protocol = EvalProtocol(trials=3, split_seed=13, classifiers=("gaussian_nb",))
    r1 = evaluate_selection(cds, [selection], protocol)
    r2 = evaluate_selection(cds, [selection], protocol)
    assert [vars(a) for a in r1.rows] == [vars(b) for b in r2.rows]

    mean_sel = [s for s in r1.summaries if s.delta_quantile == 0.9][0].auroc_mean
    mean_base = [s for s in r1.summaries if s.delta_quantile is None][0].auroc_mean
    assert abs(mean_sel - mean_base) <= 0.05


def test_report_covers_every_combination():
    cds, _ = planted_cds()
    sel = select_features(np.arange(20, dtype=float), 0.8)
    protocol = EvalProtocol(trials=2, classifiers=("gaussian_nb", "logistic_regression", "knn"))
    report = evaluate_selection(cds, [sel], protocol)
    assert len(report.rows) == 2 * 3 * 2      # (baseline + one selection) x clf x trials
    assert len(report.summaries) == 2 * 3
    assert all(0.0 <= r.auroc <= 1.0 and 0.0 <= r.sensitivity <= 1.0 for r in report.rows)
