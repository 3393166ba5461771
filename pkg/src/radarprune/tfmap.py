"""Time-frequency featurization: STFT and the 3-channel TF image.

The STFT uses a rectangular window with hop == window (no overlap) and
orthonormal FFT scaling, so the summed squared magnitude of the map
equals the energy of the consumed samples exactly (Parseval).  Rows are
frequency bins with DC centered (fftshift), columns are time frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import FeatureMap

# Log floor.  Large enough to clamp deep noise nulls, so the per-image
# minimum (the min-max reference level) does not wander from example to
# example; small against typical unit-variance noise magnitudes (~0.6).
EPS = 1e-2

DEFAULT_WINDOW = 128
DEFAULT_FRAMES = 128


@dataclass
class TFExample:
    """A TF image paired with its integer class label."""

    tensor: FeatureMap
    label: int

    def __post_init__(self):
        if not 0 <= int(self.label):
            raise ValueError(f"label must be a non-negative integer, got {self.label}")
        self.label = int(self.label)


def stft(samples: np.ndarray, window: int = DEFAULT_WINDOW, frames: int = DEFAULT_FRAMES) -> np.ndarray:
    """Complex STFT, shape (window, frames): freq bins (DC centered) x time.

    Consumes exactly window*frames samples; raises ValueError on short
    records.
    """
    samples = np.asarray(samples)
    if window < 1 or frames < 1:
        raise ValueError("window and frames must be positive")
    needed = window * frames
    if samples.shape[0] < needed:
        raise ValueError(
            f"record too short: {samples.shape[0]} samples, need {needed}"
        )
    seg = samples[:needed].reshape(frames, window)
    spec = np.fft.fft(seg, axis=1, norm="ortho")
    return np.fft.fftshift(spec, axes=1).T


def _minmax01(a: np.ndarray) -> np.ndarray:
    lo = a.min()
    span = a.max() - lo
    if span == 0:  # degenerate (constant) channel maps to all zeros
        return np.zeros_like(a, dtype=np.float32)
    return ((a - lo) / span).astype(np.float32)


def tf_image(samples: np.ndarray, window: int = DEFAULT_WINDOW, frames: int = DEFAULT_FRAMES) -> FeatureMap:
    """3-channel TF image, each channel min-max normalized to [0, 1].

    channel 0: log magnitude of the STFT
    channel 1: log power (squared magnitude)
    channel 2: instantaneous phase
    """
    spec = stft(samples, window, frames)
    mag = np.abs(spec)
    ch0 = np.log10(mag + EPS)
    ch1 = np.log10(mag * mag + EPS)
    ch2 = np.angle(spec)
    return FeatureMap(np.stack([_minmax01(ch0), _minmax01(ch1), _minmax01(ch2)]))
