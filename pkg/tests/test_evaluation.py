import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stampmon.evaluation import (
    ConfusionCounts,
    ExperimentReport,
    confusion,
    logreg_gradient,
    logreg_log_likelihood,
    run_feature_comparison,
    stratified_folds,
    train_knn,
    train_logreg,
)

# ---------------------------------------------------------------------------
# Confusion


def test_confusion_perfect_predictions():
    y = [0, 1, 0, 1, 1]
    c = confusion(y, y)
    assert c.fp == 0 and c.fn == 0
    assert c.tp == 3 and c.tn == 2


def test_confusion_rates_formatting():
    # TP=14 TN=404 FP=4 FN=1 -> FPR 0.98%, FNR 6.67%
    c = ConfusionCounts(tp=14, tn=404, fp=4, fn=1)
    assert round(100 * c.fpr, 2) == 0.98
    assert round(100 * c.fnr, 2) == 6.67
    assert c.total == 423


def test_confusion_zero_error_rates():
    c = ConfusionCounts(tp=15, tn=408, fp=0, fn=0)
    assert c.fpr == 0.0 and c.fnr == 0.0


def test_confusion_length_mismatch():
    with pytest.raises(ValueError):
        confusion([0, 1], [0, 1, 1])


@given(
    tp=st.integers(0, 50), tn=st.integers(0, 50),
    fp=st.integers(0, 50), fn=st.integers(0, 50),
)
@settings(max_examples=60, deadline=None)
def test_rate_identities(tp, tn, fp, fn):
    c = ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)
    assert c.fpr == (fp / (fp + tn) if fp + tn else 0.0)
    assert c.fnr == (fn / (fn + tp) if fn + tp else 0.0)
    assert 0.0 <= c.fpr <= 1.0 and 0.0 <= c.fnr <= 1.0


# ---------------------------------------------------------------------------
# KNN


def test_knn_memorizes_training_points():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    y = np.array([0, 1] * 10)
    clf = train_knn(X, y, k=1)
    assert np.array_equal(clf.predict(X), y)


def test_knn_tie_flags_anomaly():
    X = np.array([[0.0], [1.0], [10.0], [11.0]])
    y = np.array([1, 1, 0, 0])
    clf = train_knn(X, y, k=4)  # every vote ties 2-2
    assert clf.predict(np.array([[5.0]]))[0] == 1


def test_knn_k_too_large():
    with pytest.raises(ValueError):
        train_knn(np.zeros((3, 2)), [0, 1, 0], k=5)


# ---------------------------------------------------------------------------
# Logistic regression


def test_logreg_separable_1d():
    X = np.array([[-2.0], [-1.0], [1.0], [2.0]])
    y = np.array([0, 0, 1, 1])
    clf = train_logreg(X, y, l2=0.1)
    assert clf.predict(np.array([[-1.5]]))[0] == 0
    assert clf.predict(np.array([[1.5]]))[0] == 1


def test_logreg_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((40, 3))
    y = (rng.random(40) > 0.5).astype(float)
    l2 = 0.7
    clf = train_logreg(X, y, l2=l2)
    w, b = clf.weights, clf.intercept
    g_w, g_b = logreg_gradient(X, y, w, b, l2)
    eps = 1e-5
    for j in range(3):
        dw = np.zeros(3)
        dw[j] = eps
        num = (
            logreg_log_likelihood(X, y, w + dw, b, l2)
            - logreg_log_likelihood(X, y, w - dw, b, l2)
        ) / (2 * eps)
        assert abs(num - g_w[j]) < 1e-4
    num_b = (
        logreg_log_likelihood(X, y, w, b + eps, l2)
        - logreg_log_likelihood(X, y, w, b - eps, l2)
    ) / (2 * eps)
    assert abs(num_b - g_b) < 1e-4


def test_logreg_converges_to_tolerance():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((60, 4))
    y = (X[:, 0] + 0.3 * rng.standard_normal(60) > 0).astype(float)
    clf = train_logreg(X, y, l2=0.5, tol=1e-6)
    g_w, g_b = logreg_gradient(X, y, clf.weights, clf.intercept, 0.5)
    assert np.sqrt(np.dot(g_w, g_w) + g_b**2) < 1e-6


def test_logreg_requires_both_classes():
    with pytest.raises(ValueError):
        train_logreg(np.zeros((4, 2)), [1, 1, 1, 1])


# ---------------------------------------------------------------------------
# Cross-validation and the comparison harness


def test_folds_partition_exactly():
    y = np.array([0] * 37 + [1] * 13)
    folds = stratified_folds(y, 5, seed=4)
    all_idx = np.concatenate(folds)
    assert sorted(all_idx.tolist()) == list(range(50))
    for fold in folds:
        assert len(set(fold.tolist())) == len(fold)


def _toy_matrices(seed=5):
    rng = np.random.default_rng(seed)
    X0 = rng.normal(0, 1, (60, 2))
    X1 = rng.normal(4, 1, (12, 2))
    X = np.vstack([X0, X1])
    y = np.array([0] * 60 + [1] * 12)
    Xt0 = rng.normal(0, 1, (30, 2))
    Xt1 = rng.normal(4, 1, (6, 2))
    Xt = np.vstack([Xt0, Xt1])
    yt = np.array([0] * 30 + [1] * 6)
    return X, y, Xt, yt


def test_single_row_report():
    matrices = {"only": _toy_matrices()}
    report = run_feature_comparison(matrices, classifiers=("knn",), grids={"knn": (3,)})
    assert len(report.rows) == 1
    row = report.row("knn", "only")
    assert row.hyperparameter == 3.0
    assert row.counts.total == 36


def test_report_determinism_and_sorting():
    matrices = {"b_set": _toy_matrices(6), "a_set": _toy_matrices(7)}
    r1 = run_feature_comparison(matrices, seed=3)
    r2 = run_feature_comparison(matrices, seed=3)
    assert [row.as_dict() for row in r1.rows] == [row.as_dict() for row in r2.rows]
    keys = [(row.classifier, row.feature_set) for row in r1.rows]
    assert keys == sorted(keys)


def test_report_csv_and_table(tmp_path):
    matrices = {"only": _toy_matrices()}
    report = run_feature_comparison(matrices, classifiers=("knn", "logreg"))
    path = tmp_path / "report.csv"
    report.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("classifier,feature_set,tp,tn,fp,fn")
    table = report.to_table()
    assert "FPR (%)" in table and "knn" in table
    assert isinstance(report, ExperimentReport)
