"""End-to-end monitor pipeline: filter -> segment -> features -> PCA ->
one-class baseline, plus versioned JSON model persistence.

A MonitorModel carries everything needed to reproduce a decision
bit-identically: filter coefficients, segmentation constants, feature-set
kind, PCA, standardizer, support vectors, calibration and threshold.
"""
from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, baseline, features, signals
from .baseline import BaselineModel, Decision, KernelSpec, TuneResult
from .dsp import BiquadCascade, FilterSpec, apply_filter, design_butterworth_lowpass
from .evaluation import ConfusionCounts, confusion
from .features import FeatureVector, PcaModel, Standardizer
from .segmentation import RECOMMENDED_CONFIG, SegmentationConfig, StageSegmentation, segment_stroke
from .signals import SplitSpec, StrokeDataset, StrokeSignal, split_dataset

MODEL_FORMAT_VERSION = 1


def _build_timestamp() -> str:
    """SOURCE_DATE_EPOCH (reproducible-build convention) wins over now()."""
    import os

    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        dt = datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc)
    else:
        dt = datetime.datetime.now(datetime.timezone.utc)
    return dt.isoformat()


@dataclass(frozen=True)
class MonitorModel:
    """The full stroke-to-decision pipeline state."""

    filter_spec: FilterSpec
    filter_mode: str
    cascade: BiquadCascade
    segmentation_config: SegmentationConfig
    svm: BaselineModel
    info: dict = field(default_factory=dict)

    @property
    def threshold(self) -> float:
        return self.svm.threshold

    def with_threshold(self, threshold: float) -> "MonitorModel":
        return replace(self, svm=replace(self.svm, threshold=float(threshold)))


def preprocess_stroke(
    model: MonitorModel, stroke: StrokeSignal
) -> tuple[np.ndarray, StageSegmentation, StrokeSignal]:
    """Filter, segment and featurize one stroke with the model's own
    transforms; returns the standardized feature row."""
    filtered = apply_filter(model.cascade, stroke, mode=model.filter_mode)
    seg = segment_stroke(filtered, model.segmentation_config)
    fv = features.assemble_feature_set(
        model.svm.feature_set_kind, filtered, seg, model.svm.pca
    )
    z = model.svm.standardizer.transform(fv)
    return z.values, seg, filtered


def score_stroke(
    model: MonitorModel,
    stroke: StrokeSignal,
    threshold_override: float | None = None,
) -> tuple[Decision, StageSegmentation]:
    z, seg, _ = preprocess_stroke(model, stroke)
    return baseline.classify(model.svm, z, threshold_override), seg


@dataclass(frozen=True)
class TrainReport:
    tune: TuneResult
    n_train: int
    n_validation: int
    skipped: tuple[str, ...] = ()


def train_monitor(
    dataset: StrokeDataset,
    filter_spec: FilterSpec,
    filter_mode: str = "causal",
    segmentation_config: SegmentationConfig = RECOMMENDED_CONFIG,
    feature_set_kind: str = "proposed",
    split_spec: SplitSpec | None = None,
    nu_grid: Sequence[float] = (0.01, 0.02, 0.05, 0.1),
    gamma_grid: Sequence[float] = (),
    pca_components: int = 5,
    seed: int = 0,
) -> tuple[MonitorModel, TrainReport]:
    """Train the golden baseline on the one-class split of a dataset."""
    split_spec = split_spec or SplitSpec(seed=seed)
    split = split_dataset(dataset, split_spec, mode="one_class")
    cascade = design_butterworth_lowpass(filter_spec)

    def featurize(strokes) -> tuple[list[FeatureVector], list[StageSegmentation]]:
        fvs, segs = [], []
        for s in strokes:
            filtered = apply_filter(cascade, s, mode=filter_mode)
            seg = segment_stroke(filtered, segmentation_config)
            fvs.append(features.extract_segmental_features(filtered, seg))
            segs.append((filtered, seg))
        return fvs, segs

    train_segmental, train_cache = featurize(split.train)
    pca = None
    if feature_set_kind in ("proposed", "optimal"):
        pca = features.fit_segmental_pca(train_segmental, k=pca_components)

    def assemble(cache) -> list[FeatureVector]:
        return [
            features.assemble_feature_set(feature_set_kind, filtered, seg, pca)
            for filtered, seg in cache
        ]

    train_fvs = assemble(train_cache)
    standardizer = features.fit_standardizer(train_fvs)
    X_train = np.vstack([standardizer.transform(fv).values for fv in train_fvs])

    _, val_cache = featurize(split.validation)
    X_val = np.vstack([standardizer.transform(fv).values for fv in assemble(val_cache)])
    y_val = np.array([1 if s.label == signals.ANOMALY else 0 for s in split.validation])

    if not gamma_grid:
        g0 = 1.0 / X_train.shape[1]
        gamma_grid = (g0 / 4.0, g0, 4.0 * g0)
    tune = baseline.tune_hyperparameters(
        X_train, X_val, y_val, nu_grid=nu_grid, gamma_grid=gamma_grid
    )
    svm = replace(
        tune.model,
        feature_set_kind=feature_set_kind,
        standardizer=standardizer,
        pca=pca,
    )
    info = {
        "trained_at": _build_timestamp(),
        "version": __version__,
        "seed": seed,
        "nu": tune.nu,
        "gamma": tune.gamma,
        "threshold": tune.threshold,
        "validation_fnr": tune.validation_fnr,
        "validation_fpr": tune.validation_fpr,
        "n_train": len(split.train),
        "n_validation": len(split.validation),
        "feature_set_kind": feature_set_kind,
        "filter_mode": filter_mode,
        "grid": [dict(r) for r in tune.table],
    }
    model = MonitorModel(
        filter_spec=filter_spec,
        filter_mode=filter_mode,
        cascade=cascade,
        segmentation_config=segmentation_config,
        svm=svm,
        info=info,
    )
    report = TrainReport(tune=tune, n_train=len(split.train), n_validation=len(split.validation))
    return model, report


def evaluate_monitor(
    model: MonitorModel, strokes: Sequence[StrokeSignal]
) -> tuple[ConfusionCounts, list[Decision]]:
    decisions = [score_stroke(model, s)[0] for s in strokes]
    labels = [1 if s.label == signals.ANOMALY else 0 for s in strokes]
    preds = [1 if d.is_anomaly else 0 for d in decisions]
    return confusion(preds, labels), decisions


def build_comparison_matrices(
    dataset: StrokeDataset,
    filter_spec: FilterSpec,
    filter_mode: str = "causal",
    segmentation_config: SegmentationConfig = RECOMMENDED_CONFIG,
    kinds: Sequence[str] = ("proposed", "optimal", "s2_only", "statistical"),
    split_spec: SplitSpec | None = None,
    pca_components: int = 5,
) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Standardized (X_train, y_train, X_test, y_test) per feature set on
    the supervised (subsampled) split; PCA is fitted on the training
    subset only."""
    split_spec = split_spec or SplitSpec()
    split = split_dataset(dataset, split_spec, mode="supervised")
    cascade = design_butterworth_lowpass(filter_spec)

    def prep(strokes):
        seg_fvs, stat_fvs = [], []
        cache = []
        for s in strokes:
            filtered = apply_filter(cascade, s, mode=filter_mode)
            seg = segment_stroke(filtered, segmentation_config)
            seg_fvs.append(features.extract_segmental_features(filtered, seg))
            stat_fvs.append(features.extract_statistical_features(filtered))
            cache.append((filtered, seg))
        return seg_fvs, stat_fvs, cache

    tr_seg, tr_stat, tr_cache = prep(split.train)
    te_seg, te_stat, te_cache = prep(split.test)
    y_tr = np.array([1 if s.label == signals.ANOMALY else 0 for s in split.train])
    y_te = np.array([1 if s.label == signals.ANOMALY else 0 for s in split.test])

    pca = None
    if any(k in ("proposed", "optimal") for k in kinds):
        pca = features.fit_segmental_pca(tr_seg, k=pca_components)

    out = {}
    for kind in kinds:
        if kind == "statistical":
            tr_fvs, te_fvs = tr_stat, te_stat
        elif kind == "s2_only":
            names = ("S2_Length", "S2_P2P", "S2_Energy")
            tr_fvs = [fv.subset(names) for fv in tr_seg]
            te_fvs = [fv.subset(names) for fv in te_seg]
        else:
            tr_fvs = [
                features.assemble_feature_set(kind, filt, seg, pca)
                for filt, seg in tr_cache
            ]
            te_fvs = [
                features.assemble_feature_set(kind, filt, seg, pca)
                for filt, seg in te_cache
            ]
        standardizer = features.fit_standardizer(tr_fvs)
        X_tr = np.vstack([standardizer.transform(fv).values for fv in tr_fvs])
        X_te = np.vstack([standardizer.transform(fv).values for fv in te_fvs])
        out[kind] = (X_tr, y_tr, X_te, y_te)
    return out


# ---------------------------------------------------------------------------
# Persistence (versioned JSON; floats round-trip exactly through repr)


def _standardizer_to_json(s: Standardizer | None) -> dict | None:
    if s is None:
        return None
    return {
        "names": list(s.names),
        "means": s.means.tolist(),
        "stds": s.stds.tolist(),
        "dropped": list(s.dropped),
    }


def _standardizer_from_json(d: dict | None) -> Standardizer | None:
    if d is None:
        return None
    return Standardizer(
        names=tuple(d["names"]),
        means=np.array(d["means"], dtype=np.float64),
        stds=np.array(d["stds"], dtype=np.float64),
        dropped=tuple(d["dropped"]),
    )


def _pca_to_json(p: PcaModel | None) -> dict | None:
    if p is None:
        return None
    return {
        "standardizer": _standardizer_to_json(p.standardizer),
        "eigenvectors": p.eigenvectors.tolist(),
        "eigenvalues": p.eigenvalues.tolist(),
        "k": p.k,
    }


def _pca_from_json(d: dict | None) -> PcaModel | None:
    if d is None:
        return None
    return PcaModel(
        standardizer=_standardizer_from_json(d["standardizer"]),
        eigenvectors=np.array(d["eigenvectors"], dtype=np.float64),
        eigenvalues=np.array(d["eigenvalues"], dtype=np.float64),
        k=d["k"],
    )


def model_to_json_dict(model: MonitorModel) -> dict:
    svm = model.svm
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "filter": {
            "cutoff_hz": model.filter_spec.cutoff_hz,
            "order": model.filter_spec.order,
            "sample_rate_hz": model.filter_spec.sample_rate_hz,
            "mode": model.filter_mode,
            "sections": [list(s) for s in model.cascade.sections],
            "overall_gain": model.cascade.overall_gain,
        },
        "segmentation": {
            "envelope_window_ms": model.segmentation_config.envelope_window_ms,
            "onset_factor": model.segmentation_config.onset_factor,
            "release_factor": model.segmentation_config.release_factor,
            "idle_fraction": model.segmentation_config.idle_fraction,
            "min_stage_ms": model.segmentation_config.min_stage_ms,
        },
        "svm": {
            "support_vectors": svm.support_vectors.tolist(),
            "alphas": svm.alphas.tolist(),
            "rho": svm.rho,
            "nu": svm.nu,
            "n_train": svm.n_train,
            "kernel": {"kind": svm.kernel.kind, "gamma": svm.kernel.gamma},
            "calibration": list(svm.calibration) if svm.calibration else None,
            "threshold": svm.threshold,
            "feature_set_kind": svm.feature_set_kind,
            "standardizer": _standardizer_to_json(svm.standardizer),
            "pca": _pca_to_json(svm.pca),
        },
        "info": model.info,
    }


def save_model(model: MonitorModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_json_dict(model), indent=1))


def load_model(path: str | Path) -> MonitorModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format {doc.get('format_version')!r}")
    f = doc["filter"]
    cascade = BiquadCascade(
        sections=tuple(tuple(s) for s in f["sections"]),
        overall_gain=f["overall_gain"],
    )
    s = doc["svm"]
    calibration = tuple(s["calibration"]) if s["calibration"] else None
    svm = BaselineModel(
        support_vectors=np.array(s["support_vectors"], dtype=np.float64),
        alphas=np.array(s["alphas"], dtype=np.float64),
        rho=s["rho"],
        nu=s["nu"],
        kernel=KernelSpec(kind=s["kernel"]["kind"], gamma=s["kernel"]["gamma"]),
        n_train=s["n_train"],
        calibration=calibration,
        threshold=s["threshold"],
        feature_set_kind=s["feature_set_kind"],
        standardizer=_standardizer_from_json(s["standardizer"]),
        pca=_pca_from_json(s["pca"]),
    )
    return MonitorModel(
        filter_spec=FilterSpec(f["cutoff_hz"], f["order"], f["sample_rate_hz"]),
        filter_mode=f["mode"],
        cascade=cascade,
        segmentation_config=SegmentationConfig(**doc["segmentation"]),
        svm=svm,
        info=doc.get("info", {}),
    )
