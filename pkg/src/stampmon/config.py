"""Run configuration: one JSON document covering the whole pipeline.

Schema (all keys optional, defaults below):
{
  "filter": {"cutoff_hz": 1800.0, "order": 3, "sample_rate_hz": 100000.0,
             "mode": "causal" | "zero_phase"},
  "segmentation": {"envelope_window_ms": 2.0, "onset_factor": 5.0,
                   "release_factor": 3.0, "idle_fraction": 0.05,
                   "min_stage_ms": 0.5},
  "feature_set_kind": "proposed" | "optimal" | "s2_only" | "statistical",
  "nu_grid": [0.01, 0.02, 0.05, 0.1],
  "gamma_grid": [],                       # empty = 1/d * (1/4, 1, 4)
  "one_class_split": {"train_fraction": 0.58238..., "test_fraction": ...,
                      "subsample_target_ratio": 10.0, "seed": 0},
  "supervised_split": {"train_fraction": 0.714..., "test_fraction": 0.285...,
                       "subsample_target_ratio": 10.0, "seed": 0},
  "generator": {"n_samples_range": [17000, 18000],
                "band_bursts": [[1800, 2500, 1.0], ...],
                "stage_durations_ms": [...7 values...],
                "noise_floor_rms": 0.02,
                "sample_rate_hz": 100000.0,
                "anomaly_shift": {"s2_advance_ms": 3.0,
                                  "s2_peak_scale": 0.6, "s2_stretch": 1.5}},
  "seed": 0,
  "service": {"port": 8000, "replay_rate_per_min": 70.0, "stroke_cache": 100}
}
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dsp import FILTER_MODES, FilterSpec
from .segmentation import RECOMMENDED_CONFIG, SegmentationConfig
from .signals import AnomalyShift, GeneratorParams, SplitSpec

# 820 training normals out of 1408, remainder split evenly: the one-class
# experiment shape.
ONE_CLASS_TRAIN_FRACTION = 820.0 / 1408.0


@dataclass(frozen=True)
class RunConfig:
    filter_spec: FilterSpec = FilterSpec(1800.0, 3, 100_000.0)
    filter_mode: str = "causal"
    segmentation: SegmentationConfig = RECOMMENDED_CONFIG
    feature_set_kind: str = "proposed"
    nu_grid: tuple[float, ...] = (0.01, 0.02, 0.05, 0.1)
    gamma_grid: tuple[float, ...] = ()
    one_class_split: SplitSpec = SplitSpec(
        train_fraction=ONE_CLASS_TRAIN_FRACTION,
        test_fraction=(1.0 - ONE_CLASS_TRAIN_FRACTION) / 2.0,
    )
    supervised_split: SplitSpec = SplitSpec()
    generator: GeneratorParams = field(default_factory=GeneratorParams)
    seed: int = 0
    port: int = 8000
    replay_rate_per_min: float = 70.0
    stroke_cache: int = 100

    def __post_init__(self):
        if self.filter_mode not in FILTER_MODES:
            raise ValueError(f"unknown filter mode {self.filter_mode!r}")
        if self.replay_rate_per_min <= 0:
            raise ValueError("replay rate must be positive")
        if self.feature_set_kind not in ("proposed", "optimal", "s2_only", "statistical"):
            raise ValueError(f"unknown feature set {self.feature_set_kind!r}")


def _split_from(d: dict, base: SplitSpec) -> SplitSpec:
    return SplitSpec(
        train_fraction=d.get("train_fraction", base.train_fraction),
        test_fraction=d.get("test_fraction", base.test_fraction),
        subsample_target_ratio=d.get("subsample_target_ratio", base.subsample_target_ratio),
        seed=d.get("seed", base.seed),
    )


def config_from_dict(doc: dict) -> RunConfig:
    base = RunConfig()
    f = doc.get("filter", {})
    filter_spec = FilterSpec(
        cutoff_hz=f.get("cutoff_hz", base.filter_spec.cutoff_hz),
        order=f.get("order", base.filter_spec.order),
        sample_rate_hz=f.get("sample_rate_hz", base.filter_spec.sample_rate_hz),
    )
    s = doc.get("segmentation", {})
    segmentation = SegmentationConfig(
        envelope_window_ms=s.get("envelope_window_ms", base.segmentation.envelope_window_ms),
        onset_factor=s.get("onset_factor", base.segmentation.onset_factor),
        release_factor=s.get("release_factor", base.segmentation.release_factor),
        idle_fraction=s.get("idle_fraction", base.segmentation.idle_fraction),
        min_stage_ms=s.get("min_stage_ms", base.segmentation.min_stage_ms),
    )
    g = doc.get("generator", {})
    shift = g.get("anomaly_shift", {})
    generator = GeneratorParams(
        n_samples_range=tuple(g.get("n_samples_range", base.generator.n_samples_range)),
        band_bursts=tuple(tuple(b) for b in g.get("band_bursts", base.generator.band_bursts)),
        stage_durations_ms=tuple(g.get("stage_durations_ms", base.generator.stage_durations_ms)),
        noise_floor_rms=g.get("noise_floor_rms", base.generator.noise_floor_rms),
        anomaly_shift=AnomalyShift(
            s2_advance_ms=shift.get("s2_advance_ms", 3.0),
            s2_peak_scale=shift.get("s2_peak_scale", 0.6),
            s2_stretch=shift.get("s2_stretch", 1.5),
        ),
        sample_rate_hz=g.get("sample_rate_hz", base.generator.sample_rate_hz),
    )
    svc = doc.get("service", {})
    return RunConfig(
        filter_spec=filter_spec,
        filter_mode=f.get("mode", base.filter_mode),
        segmentation=segmentation,
        feature_set_kind=doc.get("feature_set_kind", base.feature_set_kind),
        nu_grid=tuple(doc.get("nu_grid", base.nu_grid)),
        gamma_grid=tuple(doc.get("gamma_grid", base.gamma_grid)),
        one_class_split=_split_from(doc.get("one_class_split", {}), base.one_class_split),
        supervised_split=_split_from(doc.get("supervised_split", {}), base.supervised_split),
        generator=generator,
        seed=doc.get("seed", base.seed),
        port=svc.get("port", base.port),
        replay_rate_per_min=svc.get("replay_rate_per_min", base.replay_rate_per_min),
        stroke_cache=svc.get("stroke_cache", base.stroke_cache),
    )


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return config_from_dict(json.loads(Path(path).read_text()))
