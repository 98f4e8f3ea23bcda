"""Minimal RIFF/WAVE reader and writer.

Reading supports the formats that show up in practice for evaluation corpora:
integer PCM (8/16/24/32 bit) and IEEE float (32/64 bit), any channel count
and sample rate.  Writing emits the challenge clip format only: 16-bit PCM,
little-endian.  Decoding to float and encoding back are exact inverses for
16-bit data (scale 1/32768, round half away from zero), which is what makes
preprocessing idempotent at the bit level.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE

INT16_SCALE = 32768.0


class WavFormatError(ValueError):
    """Raised when a file is not a decodable RIFF/WAVE PCM or float stream."""


@dataclass
class DecodedAudio:
    """Raw decoded audio: float64 samples in [-1, 1], shape (frames, channels)."""

    samples: np.ndarray
    sample_rate: int

    @property
    def channels(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate


def read_wav(path: str | Path) -> DecodedAudio:
    """Decode a RIFF/WAVE file to float64 samples in [-1, 1]."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _byte_rate, _block_align, bits = fmt
    if audio_format == _WAVE_FORMAT_EXTENSIBLE:
        # Sub-format GUID starts with the effective format code.
        raise WavFormatError(f"{path}: WAVE_FORMAT_EXTENSIBLE is not supported")
    if channels < 1:
        raise WavFormatError(f"{path}: channel count {channels} < 1")

    if audio_format == _WAVE_FORMAT_PCM:
        if bits == 8:
            raw = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
            flat = (raw - 128.0) / 128.0
        elif bits == 16:
            raw = np.frombuffer(payload[: len(payload) // 2 * 2], dtype="<i2")
            flat = raw.astype(np.float64) / INT16_SCALE
        elif bits == 24:
            usable = len(payload) // 3 * 3
            b = np.frombuffer(payload[:usable], dtype=np.uint8).reshape(-1, 3)
            vals = (
                b[:, 0].astype(np.int32)
                | (b[:, 1].astype(np.int32) << 8)
                | (b[:, 2].astype(np.int32) << 16)
            )
            vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
            flat = vals.astype(np.float64) / float(1 << 23)
        elif bits == 32:
            raw = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<i4")
            flat = raw.astype(np.float64) / float(1 << 31)
        else:
            raise WavFormatError(f"{path}: unsupported PCM bit depth {bits}")
    elif audio_format == _WAVE_FORMAT_IEEE_FLOAT:
        if bits == 32:
            flat = np.frombuffer(payload[: len(payload) // 4 * 4], dtype="<f4").astype(np.float64)
        elif bits == 64:
            flat = np.frombuffer(payload[: len(payload) // 8 * 8], dtype="<f8").astype(np.float64)
        else:
            raise WavFormatError(f"{path}: unsupported float bit depth {bits}")
    else:
        raise WavFormatError(f"{path}: unsupported audio format code {audio_format}")

    frames = flat.shape[0] // channels
    samples = flat[: frames * channels].reshape(frames, channels)
    return DecodedAudio(samples=samples, sample_rate=sample_rate)


def write_wav_int16(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write mono or multichannel int16 samples as a 16-bit PCM WAV file."""
    samples = np.asarray(samples, dtype=np.int16)
    if samples.ndim == 1:
        samples = samples[:, None]
    channels = samples.shape[1]
    payload = samples.astype("<i2").tobytes()
    block_align = 2 * channels
    header = b"RIFF"
    header += struct.pack("<I", 36 + len(payload))
    header += b"WAVEfmt "
    header += struct.pack(
        "<IHHIIHH", 16, _WAVE_FORMAT_PCM, channels, sample_rate,
        sample_rate * block_align, block_align, 16,
    )
    header += b"data" + struct.pack("<I", len(payload))
    Path(path).write_bytes(header + payload)


def encode_int16(x: np.ndarray) -> np.ndarray:
    """Quantize float samples in [-1, 1] to int16, rounding half away from zero."""
    x = np.asarray(x, dtype=np.float64) * INT16_SCALE
    rounded = np.trunc(x + np.copysign(0.5, x))
    return np.clip(rounded, -32768, 32767).astype(np.int16)


def decode_int16(samples: np.ndarray) -> np.ndarray:
    """Map int16 samples to float64 in [-1, 1) with the 1/32768 scale."""
    return np.asarray(samples, dtype=np.float64) / INT16_SCALE
