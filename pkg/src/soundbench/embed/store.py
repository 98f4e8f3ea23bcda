"""Embedding matrices and their binary exchange format.

File layout (all little-endian): magic ``FEMB``, version u16 = 1, header
length u32, UTF-8 JSON header ``{model_id, dim, clip_ids, frames_per_clip}``
(plus optional ``label`` and per-clip ``categories``), then raw float32 rows.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

MAGIC = b"FEMB"
VERSION = 1


class EmbeddingFormatError(ValueError):
    """Raised for bad magic/version, size mismatches, or non-finite payloads."""


@dataclass
class EmbedderSpec:
    model_id: str
    dim: int
    frames_per_clip: int = 1

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if self.dim < 1 or self.frames_per_clip < 1:
            raise ValueError("dim and frames_per_clip must be >= 1")


@dataclass
class EmbeddingMatrix:
    """Per-clip embedding rows for one labelled group of clips.

    `vectors` is row-major float32 with sum(frames_per_clip) rows; clip block
    ordering matches `clip_ids`.  `label` identifies the producing system or
    dataset split; `categories` (parallel to clip_ids) carries each clip's
    category when the matrix spans more than one.
    """

    spec: EmbedderSpec
    clip_ids: list[str]
    frames_per_clip: list[int]
    vectors: np.ndarray
    label: str = ""
    categories: Optional[list[str]] = None

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.spec.dim:
            raise EmbeddingFormatError(
                f"vectors must be (rows, {self.spec.dim}), got {self.vectors.shape}"
            )
        if len(self.frames_per_clip) != len(self.clip_ids):
            raise EmbeddingFormatError("frames_per_clip must parallel clip_ids")
        if sum(self.frames_per_clip) != self.vectors.shape[0]:
            raise EmbeddingFormatError(
                f"row count {self.vectors.shape[0]} != sum of per-clip frame counts "
                f"{sum(self.frames_per_clip)}"
            )
        if self.categories is not None and len(self.categories) != len(self.clip_ids):
            raise EmbeddingFormatError("categories must parallel clip_ids")
        if not np.all(np.isfinite(self.vectors)):
            raise EmbeddingFormatError("vectors contain non-finite values")

    def clip_rows(self, index: int) -> np.ndarray:
        start = sum(self.frames_per_clip[:index])
        return self.vectors[start : start + self.frames_per_clip[index]]

    def clip_vectors(self) -> np.ndarray:
        """One vector per clip: frames mean-pooled (float64 accumulation)."""
        out = np.empty((len(self.clip_ids), self.spec.dim), dtype=np.float64)
        start = 0
        for i, n in enumerate(self.frames_per_clip):
            out[i] = self.vectors[start : start + n].astype(np.float64).mean(axis=0)
            start += n
        return out

    def select(self, indices: list[int], label: str = "") -> "EmbeddingMatrix":
        rows = []
        for i in indices:
            rows.append(self.clip_rows(i))
        return EmbeddingMatrix(
            spec=self.spec,
            clip_ids=[self.clip_ids[i] for i in indices],
            frames_per_clip=[self.frames_per_clip[i] for i in indices],
            vectors=np.concatenate(rows) if rows else np.empty((0, self.spec.dim), np.float32),
            label=label or self.label,
            categories=[self.categories[i] for i in indices] if self.categories else None,
        )

    def group_by_category(self) -> dict[str, "EmbeddingMatrix"]:
        if self.categories is None:
            raise EmbeddingFormatError("matrix carries no per-clip categories")
        groups: dict[str, list[int]] = {}
        for i, cat in enumerate(self.categories):
            groups.setdefault(cat, []).append(i)
        return {cat: self.select(idx) for cat, idx in groups.items()}


def write_embeddings(m: EmbeddingMatrix, path: str | Path) -> None:
    header = {
        "model_id": m.spec.model_id,
        "dim": m.spec.dim,
        "clip_ids": m.clip_ids,
        "frames_per_clip": m.frames_per_clip,
    }
    if m.label:
        header["label"] = m.label
    if m.categories is not None:
        header["categories"] = m.categories
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(m.vectors, dtype="<f4").tobytes())


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    data = Path(path).read_bytes()
    if len(data) < 10 or data[:4] != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    (header_len,) = struct.unpack_from("<I", data, 6)
    if len(data) < 10 + header_len:
        raise EmbeddingFormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[10 : 10 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EmbeddingFormatError(f"{path}: unreadable header: {exc}") from None

    dim = int(header["dim"])
    clip_ids = list(header["clip_ids"])
    frames = [int(f) for f in header["frames_per_clip"]]
    payload = data[10 + header_len :]
    expected = sum(frames) * dim * 4
    if len(payload) != expected:
        raise EmbeddingFormatError(
            f"{path}: payload is {len(payload)} bytes, header implies {expected}"
        )
    vectors = np.frombuffer(payload, dtype="<f4").reshape(sum(frames), dim)
    if not np.all(np.isfinite(vectors)):
        row = int(np.argwhere(~np.isfinite(vectors))[0][0])
        raise EmbeddingFormatError(f"{path}: non-finite value at row {row}")
    frames_per_clip = frames[0] if frames and len(set(frames)) == 1 else 1
    return EmbeddingMatrix(
        spec=EmbedderSpec(header["model_id"], dim, frames_per_clip),
        clip_ids=clip_ids,
        frames_per_clip=frames,
        vectors=vectors.copy(),
        label=header.get("label", ""),
        categories=header.get("categories"),
    )
