"""Deterministic built-in spectral embedder.

Stands in for neural embedding models so the whole pipeline runs without
model inference.  A conforming 4 s clip is cut into four non-overlapping 1 s
windows; each window yields one 128-dim vector:

  STFT with frame 1024, hop 256, periodic Hann window w[n] = 0.5 - 0.5*cos(2*pi*n/1024),
  frames taken fully inside the window (83 frames), power spectrum |rfft|^2,
  64-band triangular mel filterbank (HTK scale 2595*log10(1 + f/700),
  0..11025 Hz, unit peak, evaluated at bin centers k*22050/1024),
  log10 with floor 1e-10, then per-band mean and per-band standard deviation
  (population, over the 83 frames), concatenated as [means, stds].
"""

from __future__ import annotations

import numpy as np

from ..corpus.preprocess import AudioClip, TARGET_RATE
from ..wavio import decode_int16

FRAME = 1024
HOP = 256
N_MELS = 64
LOG_FLOOR = 1e-10
WINDOWS_PER_CLIP = 4
DIM = 2 * N_MELS

BUILTIN_MODEL_ID = "builtin-logmel-v1"


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int = N_MELS,
    n_fft: int = FRAME,
    sample_rate: int = TARGET_RATE,
    f_min: float = 0.0,
    f_max: float = TARGET_RATE / 2,
) -> np.ndarray:
    """Unit-peak triangular filters on the HTK mel scale, (n_mels, n_fft//2+1)."""
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)
    bank = np.zeros((n_mels, n_fft // 2 + 1))
    for i in range(n_mels):
        left, center, right = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        bank[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


_HANN = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(FRAME) / FRAME)
_BANK = mel_filterbank()


def frame_count(window_samples: int = TARGET_RATE) -> int:
    return (window_samples - FRAME) // HOP + 1


def _window_vector(x: np.ndarray) -> np.ndarray:
    n_frames = frame_count(x.shape[0])
    starts = np.arange(n_frames) * HOP
    frames = np.stack([x[s : s + FRAME] for s in starts])
    spec = np.fft.rfft(frames * _HANN, axis=1)
    power = np.abs(spec) ** 2
    mel_power = power @ _BANK.T  # (frames, mels)
    log_mel = np.log10(np.maximum(mel_power, LOG_FLOOR))
    means = log_mel.mean(axis=0)
    stds = log_mel.std(axis=0)
    return np.concatenate([means, stds])


def builtin_embed(clip: AudioClip) -> np.ndarray:
    """Embed a conforming clip as four 128-dim vectors, one per 1 s window."""
    if not clip.conforms():
        raise ValueError(f"clip {clip.clip_id!r} does not conform to the clip format")
    x = decode_int16(clip.samples)
    vectors = np.empty((WINDOWS_PER_CLIP, DIM), dtype=np.float64)
    for w in range(WINDOWS_PER_CLIP):
        vectors[w] = _window_vector(x[w * TARGET_RATE : (w + 1) * TARGET_RATE])
    return vectors.astype(np.float32)
