"""Feature extraction: segmental (S2-S5), whole-signal statistical control
set, standardization, PCA fit/projection, and mutual-information ranking.

The "proposed" 17-vector is the 12 segmental features plus the first five
principal components of the standardized segmental matrix; "optimal" is
the ranked 8-feature subset; "s2_only" the three die-closing features;
"statistical" the 11-feature unsegmented control group.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dsp import power_spectrum
from .segmentation import StageSegmentation, stage_slice
from .signals import StrokeSignal

SEGMENTAL_STAGES = ("S2", "S3", "S4", "S5")
SEGMENTAL_KINDS = ("Length", "P2P", "Energy")
SEGMENTAL_NAMES = tuple(f"{s}_{k}" for s in SEGMENTAL_STAGES for k in SEGMENTAL_KINDS)
STATISTICAL_NAMES = (
    "mean", "variance", "peak", "P2P", "energy", "RMS",
    "spectral_density", "fundamental_frequency", "frequency_center",
    "bandwidth", "harmonic_ratio",
)
OPTIMAL_NAMES = (
    "S2_Length", "S2_P2P", "S2_Energy", "S3_Energy", "S4_P2P", "S5_Energy",
    "f3", "f4",
)
FEATURE_SET_KINDS = ("proposed", "optimal", "s2_only", "statistical")


@dataclass(frozen=True)
class FeatureVector:
    """Named, ordered feature values for one stroke."""

    names: tuple[str, ...]
    values: np.ndarray
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != len(values):
            raise ValueError("names/values length mismatch")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def subset(self, names: Sequence[str]) -> "FeatureVector":
        idx = [self.names.index(n) for n in names]
        return FeatureVector(tuple(names), self.values[idx], self.flags)


def to_matrix(vectors: Sequence[FeatureVector]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Stack vectors (which must share names) into an (n, d) matrix."""
    if not vectors:
        raise ValueError("no feature vectors")
    names = vectors[0].names
    for v in vectors:
        if v.names != names:
            raise ValueError("feature vectors disagree on names")
    return np.vstack([v.values for v in vectors]), names


def write_feature_csv(path: str | Path, vectors: Sequence[FeatureVector]) -> None:
    matrix, names = to_matrix(vectors)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# Extraction


def extract_segmental_features(
    signal: StrokeSignal, segmentation: StageSegmentation
) -> FeatureVector:
    """Length (ms), peak-to-peak and energy for stages S2..S5."""
    fs = signal.sample_rate_hz
    values = []
    for stage in SEGMENTAL_STAGES:
        seg = stage_slice(signal, segmentation, stage)
        if len(seg) == 0:
            values.extend((0.0, 0.0, 0.0))
            continue
        values.append(len(seg) / fs * 1000.0)
        values.append(float(seg.max() - seg.min()))
        values.append(float(np.sum(seg * seg)))
    return FeatureVector(SEGMENTAL_NAMES, np.array(values))


def extract_statistical_features(signal: StrokeSignal) -> FeatureVector:
    """The unsegmented time + frequency domain control-group features."""
    x = signal.samples
    mean = float(np.mean(x))
    variance = float(np.var(x))
    peak = float(np.max(np.abs(x)))
    p2p = float(x.max() - x.min())
    energy = float(np.sum(x * x))
    rms = math.sqrt(energy / len(x))

    spectrum = power_spectrum(signal, window="hann")
    total = spectrum.total_power()
    flags: tuple[str, ...] = ()
    if total <= 0.0:
        fundamental = center = bandwidth = harmonic_ratio = density = 0.0
        flags = ("zero_power",)
    else:
        freqs, power = spectrum.freqs_hz, spectrum.power
        density = total / len(power)
        above = freqs > 50.0
        if not above.any():
            fundamental = 0.0
        else:
            idx = np.flatnonzero(above)
            fundamental = float(freqs[idx[np.argmax(power[idx])]])
        center = float(np.sum(freqs * power) / total)
        bandwidth = math.sqrt(max(0.0, float(np.sum((freqs - center) ** 2 * power) / total)))
        harmonic_ratio = 0.0
        if fundamental > 0.0:
            df = freqs[1] - freqs[0]
            bins: set[int] = set()
            for k in range(2, 6):
                b = int(round(k * fundamental / df))
                for j in (b - 1, b, b + 1):
                    if 0 <= j < len(power):
                        bins.add(j)
            harmonic_ratio = float(sum(power[j] for j in sorted(bins)) / total)

    values = np.array([
        mean, variance, peak, p2p, energy, rms,
        density, fundamental, center, bandwidth, harmonic_ratio,
    ])
    return FeatureVector(STATISTICAL_NAMES, values, flags)


# ---------------------------------------------------------------------------
# Standardization and PCA


@dataclass(frozen=True)
class Standardizer:
    """Per-feature mean/std fitted on training rows; zero-variance columns
    are dropped and recorded."""

    names: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray
    dropped: tuple[str, ...] = ()

    def transform(self, fv: FeatureVector) -> FeatureVector:
        aligned = fv.subset(self.names)
        return FeatureVector(self.names, (aligned.values - self.means) / self.stds, fv.flags)

    def transform_matrix(self, matrix: np.ndarray, names: Sequence[str]) -> np.ndarray:
        idx = [list(names).index(n) for n in self.names]
        return (matrix[:, idx] - self.means) / self.stds


def fit_standardizer(vectors: Sequence[FeatureVector]) -> Standardizer:
    matrix, names = to_matrix(vectors)
    if matrix.shape[0] < 2:
        raise ValueError("need at least 2 rows to fit a standardizer")
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)
    keep = stds > 0.0
    dropped = tuple(n for n, k in zip(names, keep) if not k)
    kept_names = tuple(n for n, k in zip(names, keep) if k)
    return Standardizer(kept_names, means[keep], stds[keep], dropped)


def standardize(standardizer: Standardizer, fv: FeatureVector) -> FeatureVector:
    return standardizer.transform(fv)


@dataclass(frozen=True)
class PcaModel:
    """Eigendecomposition of the sample covariance of standardized data.

    eigenvectors holds all components column-wise (descending eigenvalue,
    largest-magnitude entry positive); the first k are retained for
    projection. The fitting standardizer travels with the model.
    """

    standardizer: Standardizer
    eigenvectors: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    k: int

    def __post_init__(self):
        if not (1 <= self.k <= self.eigenvectors.shape[1]):
            raise ValueError("invalid number of retained components")

    @property
    def component_names(self) -> tuple[str, ...]:
        return tuple(f"f{j + 1}" for j in range(self.k))


def fit_pca(Z: np.ndarray, k: int, standardizer: Standardizer | None = None) -> PcaModel:
    """Symmetric eigendecomposition of cov = Z'Z/(m-1), top-k retained."""
    Z = np.asarray(Z, dtype=np.float64)
    m, d = Z.shape
    if m < 2:
        raise ValueError("need at least 2 rows")
    if k > d:
        raise ValueError(f"cannot retain {k} components from {d} columns")
    cov = Z.T @ Z / (m - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    # Deterministic sign: largest-magnitude entry of each component positive.
    for j in range(d):
        col = eigvecs[:, j]
        pivot = np.argmax(np.abs(col))
        if col[pivot] < 0:
            eigvecs[:, j] = -col
    # Contiguous layout so in-memory and file-loaded models hit the same
    # BLAS accumulation order (bit-identical projections).
    eigvecs = np.ascontiguousarray(eigvecs)
    eigvals = np.ascontiguousarray(eigvals)
    if standardizer is None:
        names = tuple(f"x{i}" for i in range(d))
        standardizer = Standardizer(names, np.zeros(d), np.ones(d))
    return PcaModel(standardizer=standardizer, eigenvectors=eigvecs,
                    eigenvalues=eigvals, k=k)


def project(pca: PcaModel, z: FeatureVector | np.ndarray) -> FeatureVector:
    """Scores of a standardized observation on the retained components."""
    values = z.values if isinstance(z, FeatureVector) else np.asarray(z, dtype=np.float64)
    if values.shape[0] != pca.eigenvectors.shape[0]:
        raise ValueError("dimension mismatch with the fitted components")
    scores = pca.eigenvectors[:, : pca.k].T @ values
    return FeatureVector(pca.component_names, scores)


def fit_segmental_pca(vectors: Sequence[FeatureVector], k: int = 5) -> PcaModel:
    """Standardize a segmental-feature matrix and fit its PCA."""
    standardizer = fit_standardizer(vectors)
    matrix, names = to_matrix(vectors)
    Z = standardizer.transform_matrix(matrix, names)
    return fit_pca(Z, k, standardizer)


# ---------------------------------------------------------------------------
# Mutual information


def _equal_frequency_bins(x: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin assignment by quantile edges; duplicate edges collapse bins."""
    qs = np.quantile(x, np.linspace(0, 1, n_bins + 1)[1:-1])
    return np.searchsorted(qs, x, side="right")


def mutual_information_ranking(
    vectors: Sequence[FeatureVector], labels: Sequence[int], n_bins: int = 8
) -> list[tuple[str, float]]:
    """Per-feature MI (nats) against a binary label, descending.

    Features are discretized by equal-frequency binning; ties in score
    break by feature name.
    """
    matrix, names = to_matrix(vectors)
    y = np.asarray(labels, dtype=np.int64)
    if len(y) != matrix.shape[0]:
        raise ValueError("labels length mismatch")
    classes = np.unique(y)
    if len(classes) != 2:
        raise ValueError("labels must contain exactly two classes")
    if min((y == c).sum() for c in classes) < 2:
        raise ValueError("need at least 2 samples per class")
    n = len(y)
    scores = []
    for col, name in enumerate(names):
        bins = _equal_frequency_bins(matrix[:, col], n_bins)
        mi = 0.0
        for b in np.unique(bins):
            pb = (bins == b).mean()
            for c in classes:
                joint = ((bins == b) & (y == c)).sum() / n
                if joint > 0:
                    mi += joint * math.log(joint / (pb * (y == c).mean()))
        scores.append((name, max(0.0, mi)))
    return sorted(scores, key=lambda t: (-t[1], t[0]))


# ---------------------------------------------------------------------------
# Feature-set assembly


def assemble_feature_set(
    kind: str,
    signal: StrokeSignal,
    segmentation: StageSegmentation | None,
    pca: PcaModel | None = None,
) -> FeatureVector:
    """Build one of the four feature sets for a filtered stroke."""
    if kind not in FEATURE_SET_KINDS:
        raise ValueError(f"unknown feature set {kind!r}")
    if kind == "statistical":
        return extract_statistical_features(signal)
    if segmentation is None:
        raise ValueError(f"feature set {kind!r} requires a segmentation")
    segmental = extract_segmental_features(signal, segmentation)
    if kind == "s2_only":
        return segmental.subset(("S2_Length", "S2_P2P", "S2_Energy"))
    if pca is None:
        raise ValueError(f"feature set {kind!r} requires a fitted PCA model")
    z = pca.standardizer.transform(segmental)
    components = project(pca, z)
    combined = FeatureVector(
        segmental.names + components.names,
        np.concatenate([segmental.values, components.values]),
    )
    if kind == "proposed":
        return combined
    return combined.subset(OPTIMAL_NAMES)


def feature_names_for(kind: str, pca_k: int = 5) -> tuple[str, ...]:
    if kind == "proposed":
        return SEGMENTAL_NAMES + tuple(f"f{j + 1}" for j in range(pca_k))
    if kind == "optimal":
        return OPTIMAL_NAMES
    if kind == "s2_only":
        return ("S2_Length", "S2_P2P", "S2_Energy")
    if kind == "statistical":
        return STATISTICAL_NAMES
    raise ValueError(f"unknown feature set {kind!r}")
