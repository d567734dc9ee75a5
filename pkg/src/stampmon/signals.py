"""Stroke data model, file ingestion, synthetic generation and splitting.

A "stroke" is one stamping cycle of accelerometer samples. Real production
data is proprietary, so the generator here produces morphologically
matching strokes: quiet idle head, a small die-closing burst, growing
elastic/plastic deformation, a fracture peak, retraction decay, quiet
tail. Ground-truth stage boundaries go into each stroke's metadata so the
segmenter can be validated against them.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

NORMAL = "normal"
ANOMALY = "anomaly"
UNLABELED = "unlabeled"
LABELS = (NORMAL, ANOMALY, UNLABELED)

BINARY_MAGIC = b"STMP1"
_LABEL_CODES = {NORMAL: 0, ANOMALY: 1, UNLABELED: 2}
_CODE_LABELS = {v: k for k, v in _LABEL_CODES.items()}

# Stage envelope constants (relative amplitudes of the piecewise-linear
# burst envelope; see synthesize_stroke).
_LEVEL_S2 = 0.5
_LEVEL_S3 = 2.0
_LEVEL_PEAK = 6.0
_LEVEL_S6_END = 0.3
_ATTACK_MS = 0.4
_RELEASE_MS = 0.4
_DURATION_JITTER = 0.04
_LEVEL_JITTER = 0.05
POINT_NAMES = ("A", "B", "C", "D", "E", "F")


class ParseError(ValueError):
    """A dataset file row could not be parsed; carries the 1-based row."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True, eq=False)
class StrokeSignal:
    """One stamping cycle of uniformly sampled acceleration values."""

    stroke_id: str
    samples: np.ndarray
    sample_rate_hz: float
    cam_window_deg: tuple[float, float] = (150.0, 200.0)
    label: str = UNLABELED
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size < 2:
            raise ValueError("stroke needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("stroke samples must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")

    @property
    def duration_ms(self) -> float:
        return len(self.samples) / self.sample_rate_hz * 1000.0

    def with_samples(self, samples: np.ndarray) -> "StrokeSignal":
        return replace(self, samples=samples)


@dataclass(frozen=True)
class StrokeDataset:
    """Ordered stroke collection sharing one sample rate."""

    strokes: tuple[StrokeSignal, ...]
    provenance: dict = field(default_factory=lambda: {"kind": "unknown"})

    def __post_init__(self):
        object.__setattr__(self, "strokes", tuple(self.strokes))
        rates = {s.sample_rate_hz for s in self.strokes}
        if len(rates) > 1:
            raise ValueError(f"mixed sample rates in dataset: {sorted(rates)}")

    def __len__(self) -> int:
        return len(self.strokes)

    def __iter__(self):
        return iter(self.strokes)

    def count(self, label: str) -> int:
        return sum(1 for s in self.strokes if s.label == label)


@dataclass(frozen=True)
class AnomalyShift:
    """How an anomalous stroke's die-closing stage differs from normal."""

    s2_advance_ms: float = 3.0
    s2_peak_scale: float = 0.6
    s2_stretch: float = 1.5

    def __post_init__(self):
        if not self.s2_advance_ms > 0:
            raise ValueError("s2_advance_ms must be > 0")
        if not 0 < self.s2_peak_scale < 1:
            raise ValueError("s2_peak_scale must be in (0,1)")
        if not self.s2_stretch >= 1:
            raise ValueError("s2_stretch must be >= 1")


@dataclass(frozen=True)
class GeneratorParams:
    """Synthetic stroke generator knobs.

    band_bursts are (low_hz, high_hz, relative_amplitude) resonance bands;
    each stroke carries one in-band sinusoidal burst per band, shaped by a
    shared piecewise-linear stage envelope, over a white noise floor.
    """

    n_samples_range: tuple[int, int] = (17000, 18000)
    band_bursts: tuple[tuple[float, float, float], ...] = (
        (1800.0, 2500.0, 1.0),
        (2500.0, 4000.0, 0.7),
        (6000.0, 7000.0, 0.5),
    )
    stage_durations_ms: tuple[float, ...] = (45.0, 8.0, 10.0, 12.0, 15.0, 25.0, 50.0)
    noise_floor_rms: float = 0.02
    anomaly_shift: AnomalyShift = field(default_factory=AnomalyShift)
    sample_rate_hz: float = 100_000.0

    def __post_init__(self):
        lo, hi = self.n_samples_range
        if not (0 < lo <= hi):
            raise ValueError("invalid n_samples_range")
        nyquist = self.sample_rate_hz / 2.0
        prev_high = 0.0
        for low, high, amp in self.band_bursts:
            if not (0 < low < high < nyquist):
                raise ValueError(f"band ({low},{high}) outside (0, nyquist)")
            if amp < 0:
                raise ValueError("band amplitude must be >= 0")
            if low < prev_high:
                raise ValueError("bands must be ordered and non-overlapping")
            prev_high = high
        if len(self.stage_durations_ms) != 7:
            raise ValueError("stage_durations_ms needs 7 entries (S1..S7)")
        if any(d <= 0 for d in self.stage_durations_ms):
            raise ValueError("stage durations must be positive")
        total_ms = lo / self.sample_rate_hz * 1000.0
        if sum(self.stage_durations_ms) >= total_ms:
            raise ValueError("stage durations must sum to less than the cycle duration")
        if self.noise_floor_rms < 0:
            raise ValueError("noise_floor_rms must be >= 0")


@dataclass(frozen=True)
class SplitSpec:
    """Train/test fractions, training subsample ratio and split seed."""

    train_fraction: float = 5.0 / 7.0
    test_fraction: float = 2.0 / 7.0
    subsample_target_ratio: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.train_fraction <= 0 or self.test_fraction <= 0:
            raise ValueError("fractions must be positive")
        if self.train_fraction + self.test_fraction > 1.0 + 1e-12:
            raise ValueError("fractions must sum to at most 1")
        if self.subsample_target_ratio < 1:
            raise ValueError("subsample_target_ratio must be >= 1")


@dataclass(frozen=True)
class SplitResult:
    train: StrokeDataset
    test: StrokeDataset
    validation: StrokeDataset | None = None


# ---------------------------------------------------------------------------
# Synthetic generation


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def synthesize_stroke(params: GeneratorParams, label: str, seed: int) -> StrokeSignal:
    """Generate one stroke; deterministic for fixed (params, label, seed).

    All random draws happen before the anomaly transform so a normal and an
    anomalous stroke with the same seed share carriers, jitters and noise;
    the anomaly only advances, flattens and stretches the S2 stage.
    """
    if label not in (NORMAL, ANOMALY):
        raise ValueError("label must be 'normal' or 'anomaly'")
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x57A3])
    fs = params.sample_rate_hz
    lo, hi = params.n_samples_range
    n = int(rng.integers(lo, hi)) if hi > lo else lo

    durations = np.array(params.stage_durations_ms[:6], dtype=np.float64)
    durations = durations * (1.0 + rng.uniform(-_DURATION_JITTER, _DURATION_JITTER, 6))
    level_jit = 1.0 + rng.uniform(-_LEVEL_JITTER, _LEVEL_JITTER, 4)
    l2 = _LEVEL_S2 * level_jit[0]
    l3 = _LEVEL_S3 * level_jit[1]
    l4 = _LEVEL_PEAK * level_jit[2]
    l6 = _LEVEL_S6_END * level_jit[3]

    tones = []
    for low, high, amp in params.band_bursts:
        width = high - low
        freq = rng.uniform(low + 0.25 * width, high - 0.25 * width)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        tones.append((freq, phase, amp))
    noise = rng.standard_normal(n) * params.noise_floor_rms

    # Boundary times in ms; the anomaly enters S2 earlier, with a lower
    # peak and a longer duration.
    a_ms = durations[0]
    b_ms = a_ms + durations[1]
    if label == ANOMALY:
        shift = params.anomaly_shift
        s2_len = durations[1] * shift.s2_stretch
        a_ms = a_ms - shift.s2_advance_ms
        b_ms = a_ms + s2_len
        l2 = l2 * shift.s2_peak_scale
    c_ms = durations[0] + durations[1] + durations[2]
    d_ms = c_ms + durations[3]
    e_ms = d_ms + durations[4]
    f_ms = e_ms + durations[5]
    if not (0 < a_ms and a_ms + _ATTACK_MS < b_ms < c_ms < d_ms < e_ms < f_ms):
        raise ValueError("stage layout degenerate for these parameters")
    if f_ms + _RELEASE_MS >= n / fs * 1000.0:
        raise ValueError("stages exceed cycle duration")

    knot_ms = [0.0, a_ms, a_ms + _ATTACK_MS, b_ms, c_ms, d_ms, e_ms, f_ms,
               f_ms + _RELEASE_MS, n / fs * 1000.0]
    knot_val = [0.0, 0.0, l2, l2, l3, l4, 0.5 * l4, l6, 0.0, 0.0]
    t_ms = np.arange(n) / fs * 1000.0
    envelope = np.interp(t_ms, knot_ms, knot_val)

    t_s = np.arange(n) / fs
    carrier = np.zeros(n)
    for freq, phase, amp in tones:
        carrier += amp * np.sin(2.0 * math.pi * freq * t_s + phase)
    samples = envelope * carrier + noise

    ground_truth = {
        name: int(round(ms / 1000.0 * fs))
        for name, ms in zip(POINT_NAMES, (a_ms, b_ms, c_ms, d_ms, e_ms, f_ms))
    }
    meta = {
        "ground_truth": ground_truth,
        "seed": seed,
    }
    return StrokeSignal(
        stroke_id=f"{label}-{seed:08d}",
        samples=samples,
        sample_rate_hz=fs,
        label=label,
        meta=meta,
    )


def synthesize_dataset(
    params: GeneratorParams, n_normal: int, n_anomaly: int, seed: int
) -> StrokeDataset:
    """n_normal + n_anomaly strokes; per-stroke seeds derived from seed."""
    if n_normal < 0 or n_anomaly < 0:
        raise ValueError("counts must be >= 0")
    labels = [NORMAL] * n_normal + [ANOMALY] * n_anomaly
    strokes = []
    for i, label in enumerate(labels):
        # Collision-free per-stroke seed from (master seed, index).
        stroke_seed = int(np.random.SeedSequence(entropy=[seed & 0xFFFFFFFF, i]).generate_state(1)[0])
        stroke = synthesize_stroke(params, label, stroke_seed)
        strokes.append(replace(stroke, stroke_id=f"stroke-{i:05d}-{label}"))
    return StrokeDataset(
        strokes=tuple(strokes),
        provenance={"kind": "synthetic", "seed": seed,
                    "n_normal": n_normal, "n_anomaly": n_anomaly},
    )


# ---------------------------------------------------------------------------
# File formats


def _format_samples(samples: np.ndarray) -> str:
    return ";".join(repr(float(v)) for v in samples)


def write_dataset(dataset: StrokeDataset, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "csv":
        lines = ["stroke_id,label,sample_rate_hz,n_samples"]
        for s in dataset:
            lines.append(
                f"{s.stroke_id},{s.label},{repr(float(s.sample_rate_hz))},"
                f"{len(s.samples)},{_format_samples(s.samples)}"
            )
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "binary":
        with path.open("wb") as fh:
            rate = dataset.strokes[0].sample_rate_hz if len(dataset) else 0.0
            fh.write(BINARY_MAGIC)
            fh.write(struct.pack("<dI", rate, len(dataset)))
            for s in dataset:
                ident = s.stroke_id.encode("utf-8")
                fh.write(struct.pack("<H", len(ident)))
                fh.write(ident)
                fh.write(struct.pack("<BI", _LABEL_CODES[s.label], len(s.samples)))
                fh.write(s.samples.astype("<f8").tobytes())
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _infer_format(path: Path) -> str:
    return "csv" if path.suffix.lower() == ".csv" else "binary"


def load_dataset(path: str | Path, format: str | None = None) -> StrokeDataset:
    """Load a stroke file; raises ParseError naming the offending row."""
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "csv":
        strokes = _load_csv(path)
    elif fmt == "binary":
        strokes = _load_binary(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    rates = {s.sample_rate_hz for s in strokes}
    if len(rates) > 1:
        raise ValueError(f"mixed sample rates in {path}: {sorted(rates)}")
    return StrokeDataset(strokes=tuple(strokes), provenance={"kind": "file", "path": str(path)})


def _load_csv(path: Path) -> list[StrokeSignal]:
    strokes = []
    with path.open() as fh:
        header = fh.readline().strip()
        if not header.startswith("stroke_id,label,sample_rate_hz,n_samples"):
            raise ParseError(1, f"unexpected header {header!r}")
        for row_idx, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise ParseError(row_idx, f"expected 5 fields, got {len(parts)}")
            stroke_id, label, rate_s, n_s, samples_s = parts
            if label not in LABELS:
                raise ParseError(row_idx, f"unknown label {label!r}")
            try:
                rate = float(rate_s)
                n = int(n_s)
                samples = np.array(
                    [float(v) for v in samples_s.split(";")], dtype=np.float64
                )
            except ValueError as exc:
                raise ParseError(row_idx, f"non-numeric value ({exc})") from exc
            if len(samples) != n:
                raise ParseError(row_idx, f"n_samples={n} but {len(samples)} samples")
            strokes.append(StrokeSignal(stroke_id, samples, rate, label=label))
    return strokes


def _load_binary(path: Path) -> list[StrokeSignal]:
    data = path.read_bytes()
    if data[:5] != BINARY_MAGIC:
        raise ParseError(1, "bad magic bytes")
    rate, n_strokes = struct.unpack_from("<dI", data, 5)
    offset = 5 + 12
    strokes = []
    for row in range(1, n_strokes + 1):
        try:
            (id_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            ident = data[offset : offset + id_len].decode("utf-8")
            offset += id_len
            label_code, count = struct.unpack_from("<BI", data, offset)
            offset += 5
            samples = np.frombuffer(data, dtype="<f8", count=count, offset=offset).copy()
            offset += 8 * count
        except (struct.error, UnicodeDecodeError) as exc:
            raise ParseError(row, f"truncated or corrupt record ({exc})") from exc
        if label_code not in _CODE_LABELS:
            raise ParseError(row, f"unknown label code {label_code}")
        strokes.append(StrokeSignal(ident, samples, rate, label=_CODE_LABELS[label_code]))
    return strokes


# ---------------------------------------------------------------------------
# Splitting


def subsample_normals(
    strokes: Sequence[StrokeSignal], target_ratio: float, seed: int
) -> list[StrokeSignal]:
    """Drop normals until normal:anomaly <= target_ratio (seeded, ordered)."""
    normals = [s for s in strokes if s.label == NORMAL]
    anomalies = [s for s in strokes if s.label == ANOMALY]
    if not anomalies:
        raise ValueError("cannot subsample without anomaly strokes")
    n_keep = min(len(normals), _round_half_up(target_ratio * len(anomalies)))
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x5B5])
    keep_idx = sorted(rng.choice(len(normals), size=n_keep, replace=False).tolist())
    kept = [normals[i] for i in keep_idx]
    return kept + anomalies


def split_dataset(dataset: StrokeDataset, spec: SplitSpec, mode: str = "one_class") -> SplitResult:
    """Partition a labeled dataset.

    supervised: stratified train/test by the spec fractions, then the
    training normals are subsampled toward subsample_target_ratio.
    one_class: train gets train_fraction of the normals (no anomalies);
    remaining normals and all anomalies split evenly between validation
    and test (validation takes any odd remainder of normals, test of
    anomalies).
    """
    if any(s.label == UNLABELED for s in dataset):
        raise ValueError("split requires a fully labeled dataset")
    normals = [s for s in dataset if s.label == NORMAL]
    anomalies = [s for s in dataset if s.label == ANOMALY]
    rng = np.random.default_rng([spec.seed & 0xFFFFFFFF, 0xD15])
    norm_order = rng.permutation(len(normals))
    anom_order = rng.permutation(len(anomalies))
    normals = [normals[i] for i in norm_order]
    anomalies = [anomalies[i] for i in anom_order]

    def as_ds(strokes: Iterable[StrokeSignal]) -> StrokeDataset:
        return StrokeDataset(strokes=tuple(strokes), provenance=dataset.provenance)

    if mode == "supervised":
        if not anomalies:
            raise ValueError("supervised split needs anomaly strokes")
        exhaustive = abs(spec.train_fraction + spec.test_fraction - 1.0) < 1e-12

        def cut(items: list[StrokeSignal]) -> tuple[list, list]:
            n_train = _round_half_up(spec.train_fraction * len(items))
            if exhaustive:
                n_test = len(items) - n_train
            else:
                n_test = min(
                    _round_half_up(spec.test_fraction * len(items)),
                    len(items) - n_train,
                )
            return items[:n_train], items[n_train : n_train + n_test]

        train_n, test_n = cut(normals)
        train_a, test_a = cut(anomalies)
        train = subsample_normals(train_n + train_a, spec.subsample_target_ratio, spec.seed)
        return SplitResult(train=as_ds(train), test=as_ds(test_n + test_a))

    if mode == "one_class":
        if len(anomalies) < 2:
            raise ValueError("one-class split needs at least 2 anomalies for validation/test")
        n_train = _round_half_up(spec.train_fraction * len(normals))
        n_train = min(n_train, len(normals))
        rest = normals[n_train:]
        half_n = (len(rest) + 1) // 2
        half_a = len(anomalies) // 2
        train = normals[:n_train]
        validation = rest[:half_n] + anomalies[:half_a]
        test = rest[half_n:] + anomalies[half_a:]
        return SplitResult(train=as_ds(train), test=as_ds(test), validation=as_ds(validation))

    raise ValueError(f"unknown split mode {mode!r}")
