import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stampmon import signals
from stampmon.dsp import (
    FilterSpec,
    analog_magnitude_squared,
    apply_filter,
    design_butterworth_lowpass,
    power_spectrum,
)

from conftest import make_stroke


def db(x):
    return 20.0 * np.log10(np.maximum(x, 1e-300))


# ---------------------------------------------------------------------------
# Design


def test_cutoff_is_exactly_minus_3dB(std_filter, cascade):
    mag = cascade.magnitude(np.array([std_filter.cutoff_hz]), std_filter.sample_rate_hz)
    assert abs(mag[0] - 1.0 / math.sqrt(2.0)) < 1e-6


def test_dc_gain_is_one(cascade):
    mag = cascade.magnitude(np.array([0.0]), 100_000.0)
    assert abs(mag[0] - 1.0) < 1e-9


def test_analog_value_at_twice_cutoff(std_filter, cascade):
    # |H|^2 at 2*fc for order 3 is 1/(1+2^6) = 1/65 on the analog curve;
    # the digital realization must match within 0.5 dB at 3600 Hz.
    analog = analog_magnitude_squared(np.array([3600.0]), 1800.0, 3)[0]
    assert analog == pytest.approx(1.0 / 65.0)
    digital = cascade.magnitude(np.array([3600.0]), 100_000.0)[0] ** 2
    assert abs(10 * np.log10(digital / analog)) < 0.5


@pytest.mark.parametrize("order", range(1, 7))
def test_matches_analog_curve(order):
    fs, fc = 100_000.0, 1800.0
    cascade = design_butterworth_lowpass(FilterSpec(fc, order, fs))
    freqs = np.linspace(10.0, 4 * fc, 400)
    digital = cascade.magnitude(freqs, fs)
    analog = np.sqrt(analog_magnitude_squared(freqs, fc, order))
    diff_db = np.abs(db(digital) - db(analog))
    assert np.max(diff_db[freqs <= fc]) < 0.5
    assert np.max(diff_db) < 1.0


@given(
    fc_frac=st.floats(0.005, 0.45),
    order=st.integers(1, 12),
    fs=st.floats(1000.0, 500_000.0),
)
@settings(max_examples=60, deadline=None)
def test_prewarped_cutoff_property(fc_frac, order, fs):
    fc = fc_frac * fs / 2.0
    cascade = design_butterworth_lowpass(FilterSpec(fc, order, fs))
    mag = cascade.magnitude(np.array([fc]), fs)[0]
    assert abs(mag - 1.0 / math.sqrt(2.0)) < 1e-6


@pytest.mark.parametrize("order", range(1, 13))
def test_stability_all_orders(order):
    cascade = design_butterworth_lowpass(FilterSpec(1800.0, order, 100_000.0))
    for p in cascade.poles():
        assert abs(p) < 1.0


def test_monotone_nonincreasing_magnitude(cascade):
    freqs = np.linspace(0.0, 50_000.0, 2000)
    mag = cascade.magnitude(freqs, 100_000.0)
    assert np.all(np.diff(mag) <= 1e-12)


def test_design_errors():
    with pytest.raises(ValueError):
        FilterSpec(cutoff_hz=60_000.0, order=3, sample_rate_hz=100_000.0)
    with pytest.raises(ValueError):
        FilterSpec(cutoff_hz=1800.0, order=0, sample_rate_hz=100_000.0)


# ---------------------------------------------------------------------------
# Application


@pytest.mark.parametrize("mode", ["causal", "zero_phase"])
def test_constant_passes_through(cascade, mode):
    stroke = make_stroke(np.full(2000, 3.7))
    out = apply_filter(cascade, stroke, mode=mode).samples
    assert len(out) == 2000
    # after the startup transient (slowest pole decays ~e^-0.057/sample)
    # the output equals the constant
    assert np.max(np.abs(out[600:] - 3.7)) < 1e-6


def test_zero_phase_constant_is_exact(cascade):
    stroke = make_stroke(np.full(500, -2.5))
    out = apply_filter(cascade, stroke, mode="zero_phase").samples
    assert np.max(np.abs(out + 2.5)) < 1e-9


def test_high_frequency_sinusoid_attenuation(cascade):
    # analog attenuation at 10*fc, order 3: 10*log10(1+10^6) ~ 60 dB;
    # realization must reach at least 55 dB in steady state.
    fs, f = 100_000.0, 18_000.0
    t = np.arange(6000) / fs
    stroke = make_stroke(np.sin(2 * math.pi * f * t))
    out = apply_filter(cascade, stroke, mode="causal").samples
    rms_in = np.sqrt(np.mean(stroke.samples[1000:] ** 2))
    rms_out = np.sqrt(np.mean(out[1000:] ** 2))
    assert 20 * math.log10(rms_in / rms_out) >= 55.0


def test_white_noise_mostly_below_2500(cascade):
    rng = np.random.default_rng(0)
    stroke = make_stroke(rng.standard_normal(40_000))
    out = apply_filter(cascade, stroke, mode="zero_phase")
    spec = power_spectrum(out)
    below = spec.band_power(0.0, 2500.0)
    assert below / spec.total_power() >= 0.95


@pytest.mark.parametrize("mode", ["causal", "zero_phase"])
def test_linearity(cascade, mode):
    rng = np.random.default_rng(1)
    x = rng.standard_normal(1500)
    y = rng.standard_normal(1500)
    a, b = 1.7, -0.4
    fx = apply_filter(cascade, make_stroke(x), mode=mode).samples
    fy = apply_filter(cascade, make_stroke(y), mode=mode).samples
    fxy = apply_filter(cascade, make_stroke(a * x + b * y), mode=mode).samples
    assert np.max(np.abs(fxy - (a * fx + b * fy))) < 1e-9


def test_zero_phase_too_short(cascade):
    with pytest.raises(ValueError, match="zero_phase"):
        apply_filter(cascade, make_stroke(np.zeros(9)), mode="zero_phase")


def test_unknown_mode(cascade):
    with pytest.raises(ValueError):
        apply_filter(cascade, make_stroke(np.zeros(100)), mode="sideways")


# ---------------------------------------------------------------------------
# Power spectrum


@pytest.mark.parametrize("window", ["rectangular", "hann"])
def test_parseval(window):
    rng = np.random.default_rng(2)
    x = rng.standard_normal(4096)
    stroke = make_stroke(x)
    spec = power_spectrum(stroke, window=window)
    if window == "rectangular":
        w = np.ones(len(x))
    else:
        w = np.hanning(len(x))
    expected = np.mean((x * w) ** 2) / np.mean(w * w)
    assert spec.total_power() == pytest.approx(expected, rel=1e-6)


def test_sinusoid_peak_bin():
    fs, f = 100_000.0, 2000.0
    t = np.arange(5000) / fs
    spec = power_spectrum(make_stroke(np.sin(2 * math.pi * f * t)))
    peak = spec.freqs_hz[np.argmax(spec.power)]
    assert abs(peak - f) <= spec.freqs_hz[1] - spec.freqs_hz[0]


def test_zero_signal_zero_power():
    spec = power_spectrum(make_stroke(np.zeros(64)))
    assert np.all(spec.power == 0.0)


def test_too_short_for_spectrum():
    with pytest.raises(ValueError):
        power_spectrum(make_stroke(np.zeros(4)))


def test_generator_bands_elevated(gen_params):
    # the three design bands must stand out against their non-band
    # neighborhoods on a raw synthetic stroke
    stroke = signals.synthesize_stroke(gen_params, signals.NORMAL, seed=5)
    spec = power_spectrum(stroke, window="hann")

    def density(lo, hi):
        return spec.band_power(lo, hi) / (hi - lo)

    gaps = ((200.0, 1700.0), (4100.0, 5900.0), (7100.0, 20_000.0))
    gap_density = max(density(lo, hi) for lo, hi in gaps)
    for lo, hi, _ in gen_params.band_bursts:
        assert density(lo, hi) > 3.0 * gap_density
