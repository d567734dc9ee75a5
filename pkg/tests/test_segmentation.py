import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stampmon import signals
from stampmon.dsp import apply_filter
from stampmon.segmentation import (
    RECOMMENDED_CONFIG,
    STAGE_NAMES,
    DegenerateStroke,
    NoActivityDetected,
    SegmentationConfig,
    StageSegmentation,
    moving_rms,
    segment_stroke,
    stage_slice,
)

from conftest import make_stroke

TOL_SAMPLES = 200  # 2 ms at 100 kHz


@pytest.fixture(scope="module")
def filtered_pairs(gen_params, cascade):
    """(stroke, filtered, ground_truth) for a mixed batch."""
    out = []
    for seed in range(12):
        for label in (signals.NORMAL, signals.ANOMALY):
            stroke = signals.synthesize_stroke(gen_params, label, seed=seed)
            filtered = apply_filter(cascade, stroke, mode="zero_phase")
            out.append((stroke, filtered))
    return out


def test_all_zero_signal_raises():
    with pytest.raises(NoActivityDetected):
        segment_stroke(make_stroke(np.zeros(50_000)), RECOMMENDED_CONFIG)


def test_config_validation():
    with pytest.raises(ValueError):
        SegmentationConfig(onset_factor=2.0, release_factor=3.0)
    with pytest.raises(ValueError):
        SegmentationConfig(idle_fraction=0.7)
    with pytest.raises(ValueError):
        SegmentationConfig(envelope_window_ms=0.0)


def test_ground_truth_recovery(filtered_pairs):
    for stroke, filtered in filtered_pairs:
        seg = segment_stroke(filtered, RECOMMENDED_CONFIG)
        gt = stroke.meta["ground_truth"]
        for p in "ABCDEF":
            assert abs(seg.points[p] - gt[p]) <= TOL_SAMPLES, (
                stroke.stroke_id, p, seg.points[p], gt[p]
            )


def test_anomaly_enters_s2_earlier_and_longer(gen_params, cascade):
    for seed in (1, 2, 3):
        normal = signals.synthesize_stroke(gen_params, signals.NORMAL, seed=seed)
        anomaly = signals.synthesize_stroke(gen_params, signals.ANOMALY, seed=seed)
        seg_n = segment_stroke(apply_filter(cascade, normal, mode="zero_phase"), RECOMMENDED_CONFIG)
        seg_a = segment_stroke(apply_filter(cascade, anomaly, mode="zero_phase"), RECOMMENDED_CONFIG)
        assert seg_a.points["A"] < seg_n.points["A"]
        s2_n = seg_n.stages["S2"][1] - seg_n.stages["S2"][0]
        s2_a = seg_a.stages["S2"][1] - seg_a.stages["S2"][0]
        assert s2_a > s2_n


def test_partition_covers_signal(filtered_pairs):
    for _, filtered in filtered_pairs[:6]:
        seg = segment_stroke(filtered, RECOMMENDED_CONFIG)
        bounds = [seg.stages[s] for s in STAGE_NAMES]
        assert bounds[0][0] == 0
        assert bounds[-1][1] == len(filtered.samples)
        for (s0, e0), (s1, e1) in zip(bounds, bounds[1:]):
            assert e0 == s1
        concat = np.concatenate([stage_slice(filtered, seg, s) for s in STAGE_NAMES])
        assert np.array_equal(concat, filtered.samples)


def test_global_peak_sits_at_the_s4_s5_boundary(filtered_pairs):
    # D is the envelope argmax by construction; the raw |sample| peak can
    # fall one carrier period either side of it, i.e. at the tail of S4 or
    # the very head of S5.
    for _, filtered in filtered_pairs[:8]:
        seg = segment_stroke(filtered, RECOMMENDED_CONFIG)
        assert seg.envelope[seg.points["D"]] == seg.envelope.max()
        peak_idx = int(np.argmax(np.abs(filtered.samples)))
        c, d = seg.stages["S4"]
        margin = round(RECOMMENDED_CONFIG.envelope_window_ms / 1000.0
                       * filtered.sample_rate_hz)
        assert c <= peak_idx < d + margin


def test_s1_empty_when_onset_at_zero():
    # points constructed directly: A=0 makes S1 an empty slice
    env = np.zeros(20)
    env[4] = 1.0
    seg = StageSegmentation(
        points={"A": 0, "B": 2, "C": 3, "D": 4, "E": 5, "F": 6},
        stages={"S1": (0, 0), "S2": (0, 2), "S3": (2, 3), "S4": (3, 4),
                "S5": (4, 5), "S6": (5, 6), "S7": (6, 20)},
        envelope=env,
    )
    stroke = make_stroke(np.arange(20, dtype=float))
    assert len(stage_slice(stroke, seg, "S1")) == 0
    assert len(stage_slice(stroke, seg, "S7")) == 14


def test_point_ordering_enforced():
    env = np.zeros(20)
    env[3] = 1.0
    with pytest.raises(ValueError, match="strictly increasing"):
        StageSegmentation(
            points={"A": 5, "B": 2, "C": 6, "D": 3, "E": 8, "F": 9},
            stages={},
            envelope=env,
        )


@given(k_lo=st.floats(3.5, 6.0), bump=st.floats(0.5, 6.0))
@settings(max_examples=20, deadline=None)
def test_increasing_onset_factor_never_moves_A_earlier(gen_params, cascade, k_lo, bump):
    stroke = signals.synthesize_stroke(gen_params, signals.NORMAL, seed=4)
    filtered = apply_filter(cascade, stroke, mode="zero_phase")
    lo = SegmentationConfig(envelope_window_ms=2.0, onset_factor=k_lo, min_stage_ms=0.5)
    hi = SegmentationConfig(envelope_window_ms=2.0, onset_factor=k_lo + bump, min_stage_ms=0.5)
    a_lo = segment_stroke(filtered, lo).points["A"]
    a_hi = segment_stroke(filtered, hi).points["A"]
    assert a_hi >= a_lo


def test_degenerate_burst_reports_partial_points():
    # a single sharp click: activity without room for B/C between A and D
    fs = 100_000.0
    x = np.zeros(60_000)
    x[30_000:30_040] = 5.0
    with pytest.raises(DegenerateStroke) as err:
        segment_stroke(make_stroke(x, rate=fs), RECOMMENDED_CONFIG)
    assert "A" in err.value.partial_points


def test_moving_rms_matches_direct_computation():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(200)
    window = 15
    env = moving_rms(x, window)
    half = window // 2
    for i in (0, 50, 120, 199):
        lo, hi = max(0, i - half), min(len(x), i + half + 1)
        assert env[i] == pytest.approx(np.sqrt(np.mean(x[lo:hi] ** 2)), rel=1e-12)


def test_segmentation_json_round_trip(filtered_pairs):
    _, filtered = filtered_pairs[0]
    seg = segment_stroke(filtered, RECOMMENDED_CONFIG)
    doc = seg.to_json_dict()
    assert set(doc["points"]) == set("ABCDEF")
    assert set(doc["stages"]) == set(STAGE_NAMES)
    assert doc["stages"]["S1"] == [0, doc["points"]["A"]]
