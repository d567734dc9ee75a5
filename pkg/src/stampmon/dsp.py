"""Butterworth low-pass design/application and power-spectrum analysis.

The design target is the analog magnitude |H(w)|^2 = 1/(1 + (w/wc)^2n),
realized digitally as a cascade of biquads through the bilinear transform
with frequency prewarping, so the digital magnitude at the cutoff is
exactly 1/sqrt(2).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .signals import StrokeSignal

CAUSAL = "causal"
ZERO_PHASE = "zero_phase"
FILTER_MODES = (CAUSAL, ZERO_PHASE)


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass cutoff (Hz), filter order and the sampling rate."""

    cutoff_hz: float
    order: int
    sample_rate_hz: float

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise ValueError("cutoff_hz must be positive")
        if self.cutoff_hz >= self.sample_rate_hz / 2:
            raise ValueError("cutoff_hz must be below Nyquist")
        if self.order < 1:
            raise ValueError("order must be >= 1")


@dataclass(frozen=True)
class BiquadCascade:
    """Second-order sections (b0,b1,b2 | 1,a1,a2) and an overall gain."""

    sections: tuple[tuple[float, float, float, float, float], ...]
    overall_gain: float = 1.0

    @property
    def n_sections(self) -> int:
        return len(self.sections)

    @property
    def total_order(self) -> int:
        return sum(1 if (s[2] == 0.0 and s[4] == 0.0) else 2 for s in self.sections)

    def sos_array(self) -> np.ndarray:
        """(n_sections, 6) rows of b0,b1,b2,1,a1,a2 for the kernels."""
        rows = [(b0, b1, b2, 1.0, a1, a2) for b0, b1, b2, a1, a2 in self.sections]
        return np.asarray(rows, dtype=np.float64)

    def frequency_response(self, freqs_hz: np.ndarray, sample_rate_hz: float) -> np.ndarray:
        """Complex response at the given frequencies."""
        freqs_hz = np.asarray(freqs_hz, dtype=np.float64)
        z_inv = np.exp(-2j * math.pi * freqs_hz / sample_rate_hz)
        h = np.full(freqs_hz.shape, self.overall_gain, dtype=np.complex128)
        for b0, b1, b2, a1, a2 in self.sections:
            h *= (b0 + b1 * z_inv + b2 * z_inv**2) / (1.0 + a1 * z_inv + a2 * z_inv**2)
        return h

    def magnitude(self, freqs_hz: np.ndarray, sample_rate_hz: float) -> np.ndarray:
        return np.abs(self.frequency_response(freqs_hz, sample_rate_hz))

    def poles(self) -> list[complex]:
        out = []
        for _, _, _, a1, a2 in self.sections:
            if a2 == 0.0:
                out.append(complex(-a1, 0.0))
            else:
                disc = cmath.sqrt(complex(a1 * a1 - 4.0 * a2, 0.0))
                out.append((-a1 + disc) / 2.0)
                out.append((-a1 - disc) / 2.0)
        return out


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided periodogram: ascending bin centers and per-bin power."""

    freqs_hz: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        if len(self.freqs_hz) != len(self.power):
            raise ValueError("freqs and power lengths differ")

    def total_power(self) -> float:
        return float(np.sum(self.power))

    def band_power(self, low_hz: float, high_hz: float) -> float:
        mask = (self.freqs_hz >= low_hz) & (self.freqs_hz < high_hz)
        return float(np.sum(self.power[mask]))


def design_butterworth_lowpass(spec: FilterSpec) -> BiquadCascade:
    """Bilinear-transform Butterworth realization of the analog prototype.

    Unit-cutoff prototype poles are paired into biquads; the warp constant
    K = tan(pi*fc/fs) maps the analog cutoff onto the digital cutoff
    exactly, so |H| at cutoff_hz is 1/sqrt(2) by construction and the DC
    gain of every section is exactly 1.
    """
    n = spec.order
    K = math.tan(math.pi * spec.cutoff_hz / spec.sample_rate_hz)
    sections: list[tuple[float, float, float, float, float]] = []
    # Each conjugate pole pair of the unit prototype circle yields an
    # analog section s^2 + b s + 1 with b = 2 sin(pi (2k+1) / (2n)).
    for k in range(n // 2):
        b = 2.0 * math.sin(math.pi * (2.0 * k + 1.0) / (2.0 * n))
        d = 1.0 + b * K + K * K
        sections.append(
            (
                K * K / d,
                2.0 * K * K / d,
                K * K / d,
                2.0 * (K * K - 1.0) / d,
                (1.0 - b * K + K * K) / d,
            )
        )
    if n % 2 == 1:
        d = 1.0 + K
        sections.append((K / d, K / d, 0.0, (K - 1.0) / d, 0.0))
    cascade = BiquadCascade(sections=tuple(sections), overall_gain=1.0)
    for p in cascade.poles():
        if abs(p) >= 1.0:
            raise ValueError("designed section is unstable")
    return cascade


def analog_magnitude_squared(f_hz: np.ndarray, cutoff_hz: float, order: int) -> np.ndarray:
    """The ideal analog curve 1/(1 + (f/fc)^(2n)); oracle for tests."""
    ratio = np.asarray(f_hz, dtype=np.float64) / cutoff_hz
    return 1.0 / (1.0 + ratio ** (2 * order))


def _dc_state(section: tuple[float, float, float, float, float], x0: float) -> tuple[float, float]:
    # Steady state of the DF2T recursion for a constant input x0; kills the
    # startup transient for DC-dominated heads.
    b0, b1, b2, a1, a2 = section
    g = (b0 + b1 + b2) / (1.0 + a1 + a2)
    return ((g - b0) * x0, (b2 - a2 * g) * x0)


def _run_cascade(cascade: BiquadCascade, x: np.ndarray, dc_init: bool) -> np.ndarray:
    # dc_init seeds each section with the steady state for x[0], removing
    # edge transients; causal mode starts from rest like a live stream.
    if dc_init:
        zi = np.array([_dc_state(s, float(x[0])) for s in cascade.sections], dtype=np.float64)
    else:
        zi = np.zeros((cascade.n_sections, 2))
    y = _kernels.sosfilt(cascade.sos_array(), x, zi)
    if cascade.overall_gain != 1.0:
        y *= cascade.overall_gain
    return y


def apply_filter(cascade: BiquadCascade, signal: StrokeSignal, mode: str = ZERO_PHASE) -> StrokeSignal:
    """Filter a stroke; output has the same length and metadata.

    causal runs the cascade once forward (streaming order); zero_phase runs
    forward-backward over odd-reflection padding, squaring the magnitude
    response and cancelling the phase.
    """
    if mode not in FILTER_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    x = signal.samples
    if mode == CAUSAL:
        return signal.with_samples(_run_cascade(cascade, x, dc_init=False))
    if len(x) <= 3 * cascade.total_order:
        raise ValueError(
            f"zero_phase needs more than {3 * cascade.total_order} samples, got {len(x)}"
        )
    pad = 3 * (2 * cascade.n_sections)
    pad = min(pad, len(x) - 1)
    left = 2.0 * x[0] - x[pad:0:-1]
    right = 2.0 * x[-1] - x[-2 : -pad - 2 : -1]
    ext = np.concatenate([left, x, right])
    y = _run_cascade(cascade, ext, dc_init=True)
    y = _run_cascade(cascade, y[::-1], dc_init=True)[::-1]
    return signal.with_samples(np.ascontiguousarray(y[pad : pad + len(x)]))


def power_spectrum(signal: StrokeSignal, window: str = "rectangular") -> PowerSpectrum:
    """One-sided periodogram normalized so total power satisfies Parseval.

    Sum over bins equals mean((x*w)^2)/mean(w^2), the window-gain
    compensated mean square of the signal.
    """
    x = signal.samples
    n = len(x)
    if n < 8:
        raise ValueError("power_spectrum needs at least 8 samples")
    if window == "rectangular":
        w = np.ones(n)
    elif window == "hann":
        w = np.hanning(n)
    else:
        raise ValueError(f"unknown window {window!r}")
    spec = np.fft.rfft(x * w)
    scale = np.full(len(spec), 2.0)
    scale[0] = 1.0
    if n % 2 == 0:
        scale[-1] = 1.0
    power = scale * np.abs(spec) ** 2 / (n * n * np.mean(w * w))
    freqs = np.fft.rfftfreq(n, d=1.0 / signal.sample_rate_hz)
    return PowerSpectrum(freqs_hz=freqs, power=power)
