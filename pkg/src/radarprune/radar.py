"""Synthetic radar IQ record generation.

Six waveform classes: two unmodulated rectangular pulse trains (P0N#1,
P0N#2), three linear-FM chirp pulse trains (Q3N#1..3), and a noise-only
class.  Records are complex baseband sampled at ``sample_rate_hz``.

SNR convention: the complex noise floor has unit variance and pulse
amplitude is 10^(snr_db/20), so the in-pulse signal-to-noise power ratio
equals ``snr_db`` exactly by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np


class SpecError(ValueError):
    """Raised for waveform specs that violate their invariants."""


class ClassLabel(IntEnum):
    P0N1 = 0
    P0N2 = 1
    Q3N1 = 2
    Q3N2 = 3
    Q3N3 = 4
    NOISE = 5


PULSED = (ClassLabel.P0N1, ClassLabel.P0N2, ClassLabel.Q3N1, ClassLabel.Q3N2, ClassLabel.Q3N3)
CHIRPED = (ClassLabel.Q3N1, ClassLabel.Q3N2, ClassLabel.Q3N3)


@dataclass(frozen=True)
class WaveformSpec:
    label: ClassLabel
    sample_rate_hz: float = 10e6
    num_samples: int = 16384
    pulse_width_s: float = 0.0
    pulse_repetition_hz: float = 0.0
    chirp_width_hz: float = 0.0
    center_freq_offset_hz: float = 0.0
    pulses_per_burst: int = 0  # 0 means: as many pulses as fit in the record
    snr_db: float = 20.0

    @property
    def duty_cycle(self) -> float:
        return self.pulse_width_s * self.pulse_repetition_hz

    def validate(self) -> None:
        if self.sample_rate_hz <= 0:
            raise SpecError("sample_rate_hz must be positive")
        if self.num_samples < 1:
            raise SpecError("num_samples must be >= 1")
        if self.pulses_per_burst < 0:
            raise SpecError("pulses_per_burst must be >= 0")
        nyq = self.sample_rate_hz / 2
        if self.label == ClassLabel.NOISE:
            if self.pulse_width_s or self.pulse_repetition_hz or self.chirp_width_hz:
                raise SpecError("noise class takes no pulse parameters")
            return
        if self.pulse_width_s <= 0 or self.pulse_repetition_hz <= 0:
            raise SpecError("pulsed classes need positive pulse width and repetition rate")
        if not self.duty_cycle < 1:
            raise SpecError(f"duty cycle {self.duty_cycle:.3f} must be < 1")
        if self.pulse_width_s * self.sample_rate_hz < 2:
            raise SpecError("pulse width shorter than two samples")
        if self.label in CHIRPED:
            if self.chirp_width_hz <= 0:
                raise SpecError("chirped classes need a positive chirp width")
        elif self.chirp_width_hz:
            raise SpecError("unmodulated classes must have zero chirp width")
        if abs(self.center_freq_offset_hz) + self.chirp_width_hz / 2 >= nyq:
            raise SpecError("spectrum exceeds the Nyquist band")


def default_class_specs(sample_rate_hz: float = 10e6, num_samples: int = 16384) -> dict[ClassLabel, WaveformSpec]:
    """Templates for the six classes.

    Parameters are deliberately confusable: the P0N pair shares one duty
    cycle and differs only in time scale; the chirp trio overlaps in
    pulse width and sweep so separation needs the joint time-frequency
    shape rather than any single cue.
    """
    us = 1e-6
    common = dict(sample_rate_hz=sample_rate_hz, num_samples=num_samples)

    def duty(pw_s, d):
        return dict(pulse_width_s=pw_s, pulse_repetition_hz=d / pw_s)

    return {
        ClassLabel.P0N1: WaveformSpec(ClassLabel.P0N1, **duty(6.4 * us, 0.12), **common),
        ClassLabel.P0N2: WaveformSpec(ClassLabel.P0N2, **duty(25.6 * us, 0.40), **common),
        ClassLabel.Q3N1: WaveformSpec(
            ClassLabel.Q3N1, chirp_width_hz=0.8e6, **duty(12.8 * us, 0.40), **common
        ),
        ClassLabel.Q3N2: WaveformSpec(
            ClassLabel.Q3N2, chirp_width_hz=2.4e6, **duty(12.8 * us, 0.40), **common
        ),
        ClassLabel.Q3N3: WaveformSpec(
            ClassLabel.Q3N3, chirp_width_hz=4.5e6, **duty(25.6 * us, 0.20), **common
        ),
        ClassLabel.NOISE: WaveformSpec(ClassLabel.NOISE, **common),
    }


def synthesize(spec: WaveformSpec, seed) -> np.ndarray:
    """Complex IQ record for the spec; deterministic in (spec, seed).

    Noise is complex white Gaussian with unit variance.  Pulses start at
    a random phase within one repetition interval, repeat at the PRI up
    to ``pulses_per_burst`` pulses (or until the record ends), and are
    truncated at the record edges.  Chirps sweep linearly from
    -chirp_width/2 to +chirp_width/2 around the center offset.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    n = spec.num_samples
    noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)
    if spec.label == ClassLabel.NOISE:
        return noise

    fs = spec.sample_rate_hz
    amp = 10.0 ** (spec.snr_db / 20.0)
    pri = fs / spec.pulse_repetition_hz  # samples, possibly fractional
    width = spec.pulse_width_s * fs
    start = rng.uniform(0.0, pri)
    phase0 = rng.uniform(0.0, 2 * math.pi)

    max_pulses = int(math.ceil((n - start) / pri)) + 1
    count = max_pulses if spec.pulses_per_burst == 0 else min(spec.pulses_per_burst, max_pulses)

    signal = np.zeros(n, dtype=np.complex128)
    t = np.arange(n) / fs
    carrier = 2 * math.pi * spec.center_freq_offset_hz * t + phase0
    for k in range(count):
        t0 = start + k * pri
        lo = int(math.ceil(t0))
        hi = min(int(math.ceil(t0 + width)), n)
        if lo >= n or hi <= lo:
            continue
        idx = np.arange(lo, hi)
        phase = carrier[idx].copy()
        if spec.chirp_width_hz:
            tau = (idx - t0) / fs  # time into the pulse
            b = spec.chirp_width_hz
            pw = spec.pulse_width_s
            phase += 2 * math.pi * (-0.5 * b * tau + 0.5 * b * tau * tau / pw)
        signal[idx] = amp * np.exp(1j * phase)
    return signal + noise


def pulse_jitter(spec: WaveformSpec, jitter_hz: float, rng: np.random.Generator) -> WaveformSpec:
    """Spec with the center frequency shifted uniformly within +-jitter_hz.

    The draw is clipped so the occupied spectrum stays inside Nyquist.
    """
    if jitter_hz < 0:
        raise SpecError("jitter must be >= 0")
    if jitter_hz == 0 or spec.label == ClassLabel.NOISE:
        return spec
    nyq = spec.sample_rate_hz / 2
    room = nyq - spec.chirp_width_hz / 2 - 1.0
    lo = max(spec.center_freq_offset_hz - jitter_hz, -room)
    hi = min(spec.center_freq_offset_hz + jitter_hz, room)
    return replace(spec, center_freq_offset_hz=float(rng.uniform(lo, hi)))
