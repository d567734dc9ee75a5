"""Golden-baseline one-class model: nu-OC-SVM dual solved by a
most-violating-pair working-set loop, logistic score calibration to [0,1]
and thresholded decisions.

Sign convention: positive decision distance = in-class (normal); the
calibrated score is strictly decreasing in distance, so normal strokes
score near 0 and anomalies near 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .features import PcaModel, Standardizer

SV_EPS = 1e-8


class ConvergenceError(RuntimeError):
    """Solver hit the iteration cap; carries the final KKT violation."""

    def __init__(self, message: str, violation: float):
        super().__init__(f"{message} (KKT violation {violation:.3e})")
        self.violation = violation


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not (self.gamma and self.gamma > 0):
            raise ValueError("rbf kernel needs gamma > 0")

    def matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        if self.kind == "linear":
            return X @ Y.T
        sq = (
            np.sum(X * X, axis=1)[:, None]
            + np.sum(Y * Y, axis=1)[None, :]
            - 2.0 * (X @ Y.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True)
class Decision:
    raw_distance: float
    score: float
    is_anomaly: bool
    threshold_used: float


@dataclass(frozen=True)
class BaselineModel:
    """Trained one-class model plus (optionally) its preprocessing."""

    support_vectors: np.ndarray = field(repr=False)
    alphas: np.ndarray = field(repr=False)
    rho: float
    nu: float
    kernel: KernelSpec
    n_train: int
    calibration: tuple[float, float] | None = None
    threshold: float = 0.5
    feature_set_kind: str | None = None
    standardizer: Standardizer | None = None
    pca: PcaModel | None = None

    @property
    def is_calibrated(self) -> bool:
        return self.calibration is not None


def _initial_alpha(n: int, C: float) -> np.ndarray:
    alpha = np.zeros(n)
    full = int(math.floor(1.0 / C + 1e-12))
    alpha[:full] = C
    if full < n:
        alpha[full] = 1.0 - full * C
    return alpha


def train_one_class(
    X: np.ndarray,
    nu: float = 0.05,
    kernel: KernelSpec | None = None,
    tol: float = 1e-6,
    max_iter: int = 1_000_000,
) -> BaselineModel:
    """Solve the one-class dual min 1/2 a'Ka, 0 <= a_i <= 1/(nu n),
    sum(a) = 1, on normal-only rows; rho is the mean margin of the
    unbounded support vectors."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 training rows")
    if not 0 < nu <= 1:
        raise ValueError("nu must be in (0, 1]")
    if nu * n < 1.0:
        raise ValueError(f"nu*n = {nu * n:.3g} < 1 makes the box constraint infeasible")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features must be finite")
    if kernel is None:
        kernel = KernelSpec(kind="rbf", gamma=1.0 / X.shape[1])

    K = kernel.matrix(X, X)
    C = 1.0 / (nu * n)
    alpha = _initial_alpha(n, C)
    grad = K @ alpha
    iters, violation = _kernels.smo_solve(K, alpha, grad, C, tol, max_iter)
    if violation >= tol:
        raise ConvergenceError(f"no convergence in {max_iter} pair updates", violation)

    margins = K @ alpha
    unbounded = (alpha > SV_EPS) & (alpha < C - SV_EPS)
    if unbounded.any():
        rho = float(margins[unbounded].mean())
    else:
        at_upper = alpha >= C - SV_EPS
        at_lower = alpha <= SV_EPS
        hi = margins[at_upper].max() if at_upper.any() else -np.inf
        lo = margins[at_lower].min() if at_lower.any() else np.inf
        if not np.isfinite(hi) or not np.isfinite(lo):
            rho = float(margins.mean())
        else:
            rho = float((hi + lo) / 2.0)

    sv_mask = alpha > SV_EPS
    return BaselineModel(
        support_vectors=X[sv_mask].copy(),
        alphas=alpha[sv_mask].copy(),
        rho=rho,
        nu=nu,
        kernel=kernel,
        n_train=n,
    )


def decision_distance(model: BaselineModel, x: np.ndarray) -> float:
    """Signed distance sum_j alpha_j K(x_j, x) - rho (positive = normal)."""
    return float(decision_distances(model, np.atleast_2d(x))[0])


def decision_distances(model: BaselineModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"dimension mismatch: model expects {model.support_vectors.shape[1]}, got {X.shape[1]}"
        )
    K = model.kernel.matrix(X, model.support_vectors)
    return K @ model.alphas - model.rho


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def score_from_distance(model: BaselineModel, d: float | np.ndarray) -> np.ndarray | float:
    if model.calibration is None:
        raise ValueError("model is not calibrated")
    a, b = model.calibration
    z = -(a * np.asarray(d, dtype=np.float64) + b)
    return _sigmoid(np.atleast_1d(z)).reshape(np.shape(z))


def calibrate_score(
    model: BaselineModel,
    distances: Sequence[float],
    labels: Sequence[int],
    ridge: float = 1e-3,
) -> BaselineModel:
    """Fit score(x) = 1/(1 + exp(a d + b)) by (ridge-stabilized) maximum
    likelihood against anomaly=1 labels; a > 0 so the score strictly
    decreases in distance."""
    d = np.asarray(distances, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if len(d) != len(y):
        raise ValueError("distances/labels length mismatch")
    if len(np.unique(y)) != 2:
        raise CalibrationError("validation set must contain both classes")
    if np.ptp(d) <= 0:
        raise CalibrationError("all validation distances equal; cannot calibrate")

    # Logistic regression of y on d: p(anomaly) = sigmoid(w*d + c), Newton
    # steps on the ridge-regularized log-likelihood.
    w, c = 0.0, 0.0
    for _ in range(100):
        u = w * d + c
        p = _sigmoid(u)
        g_w = np.dot(d, y - p) - ridge * w
        g_c = np.sum(y - p) - ridge * c
        s = np.maximum(p * (1.0 - p), 1e-12)
        h_ww = -np.dot(s, d * d) - ridge
        h_cc = -np.sum(s) - ridge
        h_wc = -np.dot(s, d)
        det = h_ww * h_cc - h_wc * h_wc
        if abs(det) < 1e-300:
            break
        dw = (g_w * h_cc - g_c * h_wc) / det
        dc = (g_c * h_ww - g_w * h_wc) / det
        w, c = w - dw, c - dc
        if max(abs(g_w), abs(g_c)) < 1e-10:
            break
    a, b = -w, -c
    if a <= 0:
        raise CalibrationError(
            "fitted slope not positive: anomalies do not sit at lower distances"
        )
    return replace(model, calibration=(float(a), float(b)))


def classify(
    model: BaselineModel, x: np.ndarray, threshold_override: float | None = None
) -> Decision:
    """Score a preprocessed observation against the calibrated baseline."""
    if model.calibration is None:
        raise ValueError("model must be calibrated before classify")
    threshold = model.threshold if threshold_override is None else threshold_override
    d = decision_distance(model, x)
    score = float(score_from_distance(model, d))
    return Decision(
        raw_distance=d,
        score=score,
        is_anomaly=score > threshold,
        threshold_used=threshold,
    )


# ---------------------------------------------------------------------------
# Grid tuning


@dataclass(frozen=True)
class TuneResult:
    nu: float
    gamma: float | None
    threshold: float
    model: BaselineModel
    validation_fnr: float
    validation_fpr: float
    table: tuple[dict, ...] = ()


def _best_threshold(scores: np.ndarray, labels: np.ndarray) -> tuple[float, float, float]:
    """Scan cut points between sorted scores for min FNR+FPR; ties toward
    lower FPR, then the widest margin (midpoint of the optimal gap)."""
    order = np.argsort(scores)
    s_sorted = scores[order]
    cuts = [0.5]
    cuts.extend((s_sorted[i] + s_sorted[i + 1]) / 2.0 for i in range(len(s_sorted) - 1))
    n_anom = int(labels.sum())
    n_norm = len(labels) - n_anom
    best = None
    for cut in cuts:
        pred = scores > cut
        fn = int(np.sum(labels.astype(bool) & ~pred))
        fp = int(np.sum(~labels.astype(bool) & pred))
        fnr = fn / n_anom if n_anom else 0.0
        fpr = fp / n_norm if n_norm else 0.0
        key = (fnr + fpr, fpr, -_cut_margin(s_sorted, cut))
        if best is None or key < best[0]:
            best = (key, cut, fnr, fpr)
    return best[1], best[2], best[3]


def _cut_margin(sorted_scores: np.ndarray, cut: float) -> float:
    below = sorted_scores[sorted_scores <= cut]
    above = sorted_scores[sorted_scores > cut]
    if len(below) == 0 or len(above) == 0:
        return 0.0
    return float(above.min() - below.max())


def tune_hyperparameters(
    train_X: np.ndarray,
    val_X: np.ndarray,
    val_labels: Sequence[int],
    nu_grid: Sequence[float],
    gamma_grid: Sequence[float | None],
    kernel_kind: str = "rbf",
    tol: float = 1e-6,
) -> TuneResult:
    """Exhaustive (nu, gamma) grid; objective min FNR+FPR on validation,
    ties broken by lower FPR, then smaller gamma, then smaller nu."""
    if not nu_grid or not gamma_grid:
        raise ValueError("grid must be non-empty")
    y = np.asarray(val_labels, dtype=np.int64)
    rows = []
    best_key = None
    best = None
    n = np.atleast_2d(train_X).shape[0]
    for gamma in gamma_grid:
        for nu in nu_grid:
            if nu * n < 1.0:
                continue
            kernel = KernelSpec(kind=kernel_kind, gamma=gamma)
            model = train_one_class(train_X, nu=nu, kernel=kernel, tol=tol)
            distances = decision_distances(model, val_X)
            model = calibrate_score(model, distances, y)
            scores = np.asarray(score_from_distance(model, distances))
            threshold, fnr, fpr = _best_threshold(scores, y)
            rows.append({
                "nu": nu, "gamma": gamma, "threshold": threshold,
                "fnr": fnr, "fpr": fpr,
            })
            key = (fnr + fpr, fpr, gamma if gamma is not None else 0.0, nu)
            if best_key is None or key < best_key:
                best_key = key
                best = (replace(model, threshold=float(threshold)), rows[-1])
    if best is None:
        raise ValueError("no feasible grid point (every nu has nu*n < 1)")
    model, row = best
    return TuneResult(
        nu=row["nu"],
        gamma=row["gamma"],
        threshold=row["threshold"],
        model=model,
        validation_fnr=row["fnr"],
        validation_fpr=row["fpr"],
        table=tuple(rows),
    )
