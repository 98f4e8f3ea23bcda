"""Normalization of arbitrary decoded audio into the challenge clip format.

Every clip that enters the evaluation pipeline is mono, 22,050 Hz, exactly
88,200 samples (4.0 s) of 16-bit PCM.  Inputs of any rate, channel count and
length are downmixed by equal-weight channel averaging, resampled with a
band-limited windowed-sinc filter, then zero-padded or reduced to a single
4-second window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..wavio import DecodedAudio, encode_int16

TARGET_RATE = 22050
TARGET_SAMPLES = 88200
WINDOW_HOP = 11025  # 0.5 s grid for segment selection

MIN_RATE = 8000
MAX_RATE = 192000

# Resampler design: Kaiser-windowed sinc, beta = 8.6, 64 zero-crossings per
# side of the (cutoff-scaled) sinc.
KAISER_BETA = 8.6
ZERO_CROSSINGS = 64

PadSegmentPolicy = Literal["max-rms", "first"]


class PreprocessError(ValueError):
    """Raised for undecodable, empty, or out-of-range-rate input."""


@dataclass
class AudioClip:
    """A clip in the challenge format plus its manifest metadata."""

    samples: np.ndarray  # int16, shape (88200,)
    clip_id: str
    category: str
    source_recording_id: str = ""
    split: str = "development"
    referent_flag: bool = False
    anchor_flag: Optional[tuple[str, str]] = None  # (quality_pole, fit_pole)
    sample_rate: int = TARGET_RATE
    channels: int = 1

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate

    def conforms(self) -> bool:
        return (
            self.sample_rate == TARGET_RATE
            and self.channels == 1
            and self.samples.ndim == 1
            and self.samples.shape[0] == TARGET_SAMPLES
            and self.samples.dtype == np.int16
        )


def _kaiser(x: np.ndarray) -> np.ndarray:
    """Kaiser window on [-1, 1], zero outside."""
    inside = np.abs(x) <= 1.0
    arg = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    return np.where(inside, np.i0(KAISER_BETA * arg) / np.i0(KAISER_BETA), 0.0)


def _phase_kernel(frac: float, half_width: int, rho: float) -> np.ndarray:
    """Evaluate the windowed-sinc kernel at offsets (j - frac), j in [-T, T]."""
    u = np.arange(-half_width, half_width + 1, dtype=np.float64) - frac
    return rho * np.sinc(rho * u) * _kaiser(u / half_width)


def resample(x: np.ndarray, rate_in: int, rate_out: int = TARGET_RATE) -> np.ndarray:
    """Resample a mono float signal with the windowed-sinc design.

    Identity when rate_in == rate_out.  The computation is organized per
    fractional phase of the rational rate ratio so that each phase shares one
    exactly evaluated kernel; results are deterministic for fixed inputs.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("resample expects a mono signal")
    if rate_in == rate_out:
        return x.copy()

    n_in = x.shape[0]
    n_out = max(1, (n_in * rate_out + rate_in // 2) // rate_in)
    g = np.gcd(rate_in, rate_out)
    m_step = rate_in // g  # input-sample advance between same-phase outputs
    n_phases = rate_out // g

    rho = min(1.0, rate_out / rate_in)  # anti-alias cutoff relative to input Nyquist
    half_width = int(np.ceil(ZERO_CROSSINGS / rho))
    taps = 2 * half_width + 1

    max_base = ((n_out - 1) * m_step) // n_phases
    pad_right = max(0, max_base + taps - half_width - n_in)
    xpad = np.concatenate([np.zeros(half_width), x, np.zeros(pad_right)])

    y = np.empty(n_out, dtype=np.float64)
    stride = xpad.strides[0]
    for p in range(min(n_phases, n_out)):
        num = p * m_step
        base = num // n_phases
        frac = (num % n_phases) / n_phases
        kernel = _phase_kernel(frac, half_width, rho)
        rows = (n_out - p + n_phases - 1) // n_phases
        # window for output p + m*n_phases starts at padded index base + m*m_step
        windows = as_strided(
            xpad[base:], shape=(rows, taps), strides=(m_step * stride, stride)
        )
        y[p::n_phases] = windows @ kernel
    return y


def downmix(samples: np.ndarray) -> np.ndarray:
    """Equal-weight average of channels; (frames, channels) -> (frames,)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        return samples
    return samples.mean(axis=1)


def select_window_starts(n: int) -> list[int]:
    """Candidate 4 s window starts on the 0.5 s hop grid for an n-sample signal."""
    return list(range(0, n - TARGET_SAMPLES + 1, WINDOW_HOP))


def _max_rms_start(x: np.ndarray) -> int:
    best_start = 0
    best_energy = -1.0
    for start in select_window_starts(x.shape[0]):
        seg = x[start : start + TARGET_SAMPLES]
        energy = float(np.dot(seg, seg))
        if energy > best_energy:
            best_energy = energy
            best_start = start
    return best_start


def preprocess_clip(
    raw: DecodedAudio,
    policy: PadSegmentPolicy = "max-rms",
    *,
    clip_id: str = "",
    category: str = "",
    source_recording_id: str = "",
    split: str = "development",
) -> AudioClip:
    """Normalize decoded audio to a conforming 4 s mono 22,050 Hz clip.

    Multichannel input is downmixed first, then resampled; shorter-than-4 s
    signals are zero-padded at the end, longer ones reduced to one window
    chosen by `policy` ("max-rms": highest-energy window on the 0.5 s hop
    grid, earliest wins ties; "first": the initial window).
    """
    samples = np.asarray(raw.samples)
    if samples.size == 0:
        raise PreprocessError("zero-length input")
    if not (MIN_RATE <= raw.sample_rate <= MAX_RATE):
        raise PreprocessError(
            f"declared sample rate {raw.sample_rate} outside [{MIN_RATE}, {MAX_RATE}] Hz"
        )

    mono = downmix(samples)
    resampled = resample(mono, raw.sample_rate, TARGET_RATE)

    n = resampled.shape[0]
    if n == TARGET_SAMPLES:
        final = resampled
    elif n < TARGET_SAMPLES:
        final = np.concatenate([resampled, np.zeros(TARGET_SAMPLES - n)])
    else:
        if policy == "max-rms":
            start = _max_rms_start(resampled)
        elif policy == "first":
            start = 0
        else:
            raise PreprocessError(f"unknown pad/segment policy {policy!r}")
        final = resampled[start : start + TARGET_SAMPLES]

    return AudioClip(
        samples=encode_int16(final),
        clip_id=clip_id,
        category=category,
        source_recording_id=source_recording_id,
        split=split,
    )
