"""Confusion metrics, the two light reference classifiers (KNN, logistic
regression) and the feature-set comparison experiment.

Anomaly is the positive class everywhere: FPR = FP/(FP+TN) is the
unwarranted-stop rate, FNR = FN/(FN+TP) the missed-defect rate.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def fpr(self) -> float:
        return self.fp / (self.fp + self.tn) if (self.fp + self.tn) else 0.0

    @property
    def fnr(self) -> float:
        return self.fn / (self.fn + self.tp) if (self.fn + self.tp) else 0.0

    @property
    def errors(self) -> int:
        return self.fp + self.fn

    def formatted(self) -> str:
        return (
            f"TP={self.tp} TN={self.tn} FP={self.fp} FN={self.fn} "
            f"FPR={100 * self.fpr:.2f}% FNR={100 * self.fnr:.2f}%"
        )


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionCounts:
    """Counts with anomaly (1) as the positive class."""
    pred = np.asarray(predictions, dtype=bool)
    y = np.asarray(labels, dtype=bool)
    if pred.shape != y.shape:
        raise ValueError("predictions/labels length mismatch")
    return ConfusionCounts(
        tp=int(np.sum(pred & y)),
        tn=int(np.sum(~pred & ~y)),
        fp=int(np.sum(pred & ~y)),
        fn=int(np.sum(~pred & y)),
    )


# ---------------------------------------------------------------------------
# Reference classifiers


@dataclass(frozen=True)
class KnnClassifier:
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    k: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        d2 = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(self.X * self.X, axis=1)[None, :]
            - 2.0 * X @ self.X.T
        )
        # Stable argsort keeps distance ties deterministic.
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        votes = self.y[nearest].sum(axis=1)
        # Majority vote; exact ties flag the anomaly (conservative).
        return (2 * votes >= self.k).astype(np.int64)


def train_knn(X: np.ndarray, y: Sequence[int], k: int) -> KnnClassifier:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds {X.shape[0]} training rows")
    if len(np.unique(y)) < 2:
        raise ValueError("training labels must contain both classes")
    return KnnClassifier(X=X, y=y, k=k)


@dataclass(frozen=True)
class LogisticClassifier:
    weights: np.ndarray
    intercept: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.atleast_2d(X) @ self.weights + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision(X)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision(X) > 0).astype(np.int64)


def logreg_log_likelihood(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float
) -> float:
    u = X @ w + b
    # log sigma(u) for y=1, log(1-sigma(u)) for y=0, numerically safe.
    ll = -np.sum(np.logaddexp(0.0, -u) * y + np.logaddexp(0.0, u) * (1 - y))
    return float(ll - 0.5 * l2 * (np.dot(w, w) + b * b))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logreg_gradient(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float
) -> tuple[np.ndarray, float]:
    p = _sigmoid(X @ w + b)
    return X.T @ (y - p) - l2 * w, float(np.sum(y - p) - l2 * b)


def train_logreg(
    X: np.ndarray,
    y: Sequence[int],
    l2: float = 1.0,
    tol: float = 1e-6,
    max_iter: int = 100_000,
) -> LogisticClassifier:
    """L2-regularized maximum likelihood by gradient ascent, run to
    gradient-norm < tol.

    Steps follow the Barzilai-Borwein rule (safeguarded by the Lipschitz
    bound ||X||_F^2/4 + l2): line searches on the log-likelihood stall at
    float resolution before the gradient reaches tol, the gradient itself
    does not."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise ValueError("training labels must contain both classes")
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    theta = np.zeros(X.shape[1] + 1)
    lipschitz = (float(np.sum(X * X)) + len(y)) / 4.0 + l2
    step_lo = 1.0 / lipschitz
    step_hi = 1.0 / max(l2, 1e-12)  # inverse strong-concavity bound
    step = step_lo
    prev_theta = prev_g = None
    best_theta, best_norm = theta, math.inf
    grad_norm = math.inf
    for _ in range(max_iter):
        g_w, g_b = logreg_gradient(X, y, theta[:-1], float(theta[-1]), l2)
        g = np.concatenate([g_w, [g_b]])
        grad_norm = float(np.linalg.norm(g))
        if grad_norm < tol:
            return LogisticClassifier(weights=theta[:-1].copy(), intercept=float(theta[-1]))
        if not math.isfinite(grad_norm) or grad_norm > 4.0 * best_norm:
            # BB overshoot: restart from the best point with conservative steps
            theta = best_theta
            prev_theta = prev_g = None
            step_hi = max(step_hi * 0.25, step_lo)
            step = step_lo
            continue
        if grad_norm < best_norm:
            best_theta, best_norm = theta, grad_norm
        if prev_theta is not None:
            s = theta - prev_theta
            delta_g = g - prev_g
            denom = float(s @ delta_g)
            if denom < 0:
                step = min(max(float(s @ s) / -denom, step_lo), step_hi)
        prev_theta, prev_g = theta, g
        theta = theta + step * g
    raise RuntimeError(f"logistic regression did not converge: |grad| = {grad_norm:.3e}")


# ---------------------------------------------------------------------------
# Feature-set comparison experiment


@dataclass(frozen=True)
class ReportRow:
    classifier: str
    feature_set: str
    counts: ConfusionCounts
    hyperparameter: float
    seed: int

    def as_dict(self) -> dict:
        return {
            "classifier": self.classifier,
            "feature_set": self.feature_set,
            "tp": self.counts.tp,
            "tn": self.counts.tn,
            "fp": self.counts.fp,
            "fn": self.counts.fn,
            "fpr_pct": round(100 * self.counts.fpr, 2),
            "fnr_pct": round(100 * self.counts.fnr, 2),
            "hyperparameter": self.hyperparameter,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ReportRow, ...]

    def row(self, classifier: str, feature_set: str) -> ReportRow:
        for r in self.rows:
            if r.classifier == classifier and r.feature_set == feature_set:
                return r
        raise KeyError((classifier, feature_set))

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.rows[0].as_dict()))
            writer.writeheader()
            for r in self.rows:
                writer.writerow(r.as_dict())

    def to_table(self) -> str:
        header = f"{'Model':<10}{'Feature':<14}{'TP':>4}{'TN':>5}{'FP':>4}{'FN':>4}{'FPR (%)':>9}{'FNR (%)':>9}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            c = r.counts
            lines.append(
                f"{r.classifier:<10}{r.feature_set:<14}{c.tp:>4}{c.tn:>5}{c.fp:>4}{c.fn:>4}"
                f"{100 * c.fpr:>9.2f}{100 * c.fnr:>9.2f}"
            )
        return "\n".join(lines)


def stratified_folds(y: np.ndarray, n_folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified fold indices partitioning range(len(y))."""
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xF01D])
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        for pos, i in enumerate(idx):
            folds[pos % n_folds].append(int(i))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def _cv_accuracy(
    train: Callable[[np.ndarray, np.ndarray], object],
    X: np.ndarray,
    y: np.ndarray,
    folds: list[np.ndarray],
) -> float:
    correct = 0
    for fold in folds:
        mask = np.ones(len(y), dtype=bool)
        mask[fold] = False
        clf = train(X[mask], y[mask])
        correct += int(np.sum(clf.predict(X[fold]) == y[fold]))
    return correct / len(y)


DEFAULT_GRIDS: dict[str, tuple[float, ...]] = {
    "knn": (1, 3, 5, 7),
    "logreg": (0.01, 0.1, 1.0),
}


def grid_search_classifier(
    name: str,
    X: np.ndarray,
    y: np.ndarray,
    grid: Sequence[float],
    n_folds: int = 5,
    seed: int = 0,
):
    """5-fold CV accuracy over the hyperparameter grid; refit the best."""
    folds = stratified_folds(y, n_folds, seed)
    best = None
    for value in grid:
        if name == "knn":
            train = lambda Xt, yt, v=value: train_knn(Xt, yt, k=int(v))
        elif name == "logreg":
            train = lambda Xt, yt, v=value: train_logreg(Xt, yt, l2=float(v))
        else:
            raise ValueError(f"unknown classifier {name!r}")
        acc = _cv_accuracy(train, X, y, folds)
        if best is None or acc > best[0]:
            best = (acc, value, train)
    _, value, train = best
    return train(X, y), value


def run_feature_comparison(
    matrices: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]],
    classifiers: Sequence[str] = ("knn", "logreg"),
    grids: dict[str, Sequence[float]] | None = None,
    seed: int = 0,
) -> ExperimentReport:
    """Grid-search each (classifier, feature set) by cross-validated
    accuracy on the training split, refit, evaluate once on the test split.

    matrices maps feature-set name -> (X_train, y_train, X_test, y_test),
    already standardized per set. Rows are sorted by (classifier, set).
    """
    grids = grids or DEFAULT_GRIDS
    rows = []
    for clf_name in sorted(classifiers):
        for set_name in sorted(matrices):
            X_tr, y_tr, X_te, y_te = matrices[set_name]
            clf, hyper = grid_search_classifier(
                clf_name, X_tr, y_tr, grids[clf_name], seed=seed
            )
            counts = confusion(clf.predict(X_te), y_te)
            rows.append(ReportRow(clf_name, set_name, counts, float(hyper), seed))
    return ExperimentReport(rows=tuple(rows))
