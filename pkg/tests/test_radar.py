"""Waveform synthesis: spec validation, envelopes, chirps, and SNR."""

import math

import numpy as np
import pytest

from radarprune.radar import (
    CHIRPED,
    ClassLabel,
    SpecError,
    WaveformSpec,
    default_class_specs,
    pulse_jitter,
    synthesize,
)

FS = 10e6
N = 16384


def pulsed_spec(label=ClassLabel.P0N1, pw=10e-6, prf=1e4, snr=30.0, **kw):
    return WaveformSpec(
        label, sample_rate_hz=FS, num_samples=N, pulse_width_s=pw, pulse_repetition_hz=prf, snr_db=snr, **kw
    )


class TestSpecValidation:
    def test_duty_cycle_must_stay_below_one(self):
        with pytest.raises(SpecError):
            pulsed_spec(pw=100e-6, prf=1e4).validate()  # duty exactly 1

    def test_noise_takes_no_pulse_parameters(self):
        with pytest.raises(SpecError):
            WaveformSpec(ClassLabel.NOISE, pulse_width_s=1e-6, pulse_repetition_hz=1e4).validate()

    def test_unmodulated_classes_reject_chirp(self):
        with pytest.raises(SpecError):
            pulsed_spec(chirp_width_hz=1e6).validate()

    def test_chirped_classes_require_chirp(self):
        with pytest.raises(SpecError):
            pulsed_spec(label=ClassLabel.Q3N1).validate()

    def test_spectrum_confined_to_nyquist(self):
        with pytest.raises(SpecError):
            pulsed_spec(label=ClassLabel.Q3N1, chirp_width_hz=6e6, center_freq_offset_hz=3e6).validate()

    def test_pulse_must_span_two_samples(self):
        with pytest.raises(SpecError):
            pulsed_spec(pw=1e-7, prf=1e3).validate()

    def test_default_specs_are_valid_and_confusable(self):
        specs = default_class_specs()
        assert set(specs) == set(ClassLabel)
        for label, spec in specs.items():
            spec.validate()
            assert spec.label == label
            if label != ClassLabel.NOISE:
                assert 0 < spec.duty_cycle < 1
        widths = [specs[l].chirp_width_hz for l in CHIRPED]
        assert widths == sorted(widths)  # distinct, increasing sweeps
        assert len(set(widths)) == len(widths)


class TestSynthesis:
    def test_noise_class_power_and_no_pulses(self):
        record = synthesize(WaveformSpec(ClassLabel.NOISE, sample_rate_hz=FS, num_samples=N), seed=0)
        power = float(np.mean(np.abs(record) ** 2))
        assert abs(power - 1.0) < 0.05  # unit noise variance within 5%
        # nothing crosses a 30 dB pulse threshold
        assert int(np.sum(np.abs(record) > 10.0)) == 0

    def test_deterministic_under_seed(self):
        spec = pulsed_spec()
        a = synthesize(spec, seed=7)
        b = synthesize(spec, seed=7)
        assert np.array_equal(a, b)
        c = synthesize(spec, seed=8)
        assert not np.array_equal(a, c)

    def test_duty_cycle_fraction_of_hot_samples(self):
        # duty 0.1 at 30 dB: amplitude 31.6, so a half-amplitude threshold
        # cleanly separates pulse from noise
        spec = pulsed_spec(pw=10e-6, prf=1e4, snr=30.0)
        assert spec.duty_cycle == pytest.approx(0.1)
        fractions = []
        for seed in range(5):
            record = synthesize(spec, seed=seed)
            amp = 10 ** (30.0 / 20.0)
            fractions.append(float(np.mean(np.abs(record) > amp / 2)))
        assert abs(np.mean(fractions) - 0.1) < 0.02

    def test_pulses_per_burst_caps_the_train(self):
        spec = pulsed_spec(pw=10e-6, prf=1e4, snr=30.0, pulses_per_burst=3)
        record = synthesize(spec, seed=3)
        hot = np.abs(record) > 10 ** (30.0 / 20.0) / 2
        # count contiguous hot runs
        edges = np.diff(hot.astype(np.int8))
        starts = int(np.sum(edges == 1)) + int(hot[0])
        assert starts <= 3

    def test_chirp_sweep_spans_requested_width(self):
        b = 2.0e6
        spec = pulsed_spec(label=ClassLabel.Q3N2, pw=12.8e-6, prf=1e4, snr=30.0, chirp_width_hz=b)
        record = synthesize(spec, seed=1)
        amp = 10 ** (30.0 / 20.0)
        hot = np.flatnonzero(np.abs(record) > amp / 2)
        # take the longest contiguous hot run as one pulse
        splits = np.split(hot, np.flatnonzero(np.diff(hot) > 1) + 1)
        pulse = max(splits, key=len)
        inner = pulse[5:-5]  # drop edge samples
        inst = np.angle(record[inner[1:]] * np.conj(record[inner[:-1]])) * FS / (2 * math.pi)
        # instantaneous frequency ramps linearly across the pulse, so the
        # fitted slope times the pulse length recovers the sweep width
        slope = np.polyfit(inner[:-1].astype(float), inst, 1)[0]
        span = float(slope) * spec.pulse_width_s * FS
        assert abs(span - b) / b < 0.10

    def test_snr_calibration_within_half_db(self):
        for snr in (15.0, 20.0, 25.0):
            spec = pulsed_spec(pw=40e-6, prf=1e4, snr=snr)  # duty 0.4
            record = synthesize(spec, seed=11)
            amp = 10 ** (snr / 20.0)
            hot = np.abs(record) > amp / 2
            p_in = float(np.mean(np.abs(record[hot]) ** 2))
            p_out = float(np.mean(np.abs(record[~hot]) ** 2))
            measured = 10 * math.log10((p_in - p_out) / p_out)
            assert abs(measured - snr) < 0.5

    def test_invalid_spec_rejected_at_synthesis(self):
        with pytest.raises(SpecError):
            synthesize(pulsed_spec(pw=100e-6, prf=1e4), seed=0)

    def test_center_offset_moves_the_tone(self):
        f0 = 1.25e6
        spec = pulsed_spec(pw=40e-6, prf=1e4, snr=30.0, center_freq_offset_hz=f0)
        record = synthesize(spec, seed=2)
        amp = 10 ** (30.0 / 20.0)
        hot = np.flatnonzero(np.abs(record) > amp / 2)
        inst = np.angle(record[hot[1:]] * np.conj(record[hot[:-1]])) * FS / (2 * math.pi)
        assert abs(float(np.median(inst)) - f0) < 0.05e6


class TestJitter:
    def test_zero_jitter_is_identity(self):
        spec = pulsed_spec()
        rng = np.random.default_rng(0)
        assert pulse_jitter(spec, 0.0, rng) is spec

    def test_noise_class_unaffected(self):
        spec = WaveformSpec(ClassLabel.NOISE, sample_rate_hz=FS, num_samples=N)
        rng = np.random.default_rng(0)
        assert pulse_jitter(spec, 1e6, rng) is spec

    def test_draw_stays_in_band(self):
        spec = pulsed_spec(label=ClassLabel.Q3N3, pw=25.6e-6, prf=7812.5, chirp_width_hz=4.5e6)
        rng = np.random.default_rng(1)
        for _ in range(50):
            jittered = pulse_jitter(spec, 3e6, rng)
            jittered.validate()
            assert abs(jittered.center_freq_offset_hz - spec.center_freq_offset_hz) <= 3e6

    def test_negative_jitter_rejected(self):
        with pytest.raises(SpecError):
            pulse_jitter(pulsed_spec(), -1.0, np.random.default_rng(0))

    def test_jitter_is_deterministic_in_rng(self):
        spec = pulsed_spec()
        a = pulse_jitter(spec, 1e6, np.random.default_rng(5))
        b = pulse_jitter(spec, 1e6, np.random.default_rng(5))
        assert a.center_freq_offset_hz == b.center_freq_offset_hz
