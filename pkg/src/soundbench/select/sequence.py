"""Diversity-sequence assembly: 20 medoids concatenated with silence gaps.

File names reveal the category and an obfuscated token only; the token to
system mapping is written to a separate restricted file.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..corpus.preprocess import TARGET_RATE, TARGET_SAMPLES
from .kmeans import SelectError
from .medoids import MedoidEntry

GAP_SECONDS = 0.5
TOKEN_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"
TOKEN_LENGTH = 8


@dataclass
class DiversitySequence:
    system_id: str
    category: str
    token: str
    samples: np.ndarray | None = None  # int16 mono; None when reloaded from the map

    @property
    def file_name(self) -> str:
        return f"{self.category}_{self.token}.wav"


def sequence_length(n_items: int, gap_seconds: float = GAP_SECONDS) -> int:
    gap = int(round(gap_seconds * TARGET_RATE))
    return n_items * TARGET_SAMPLES + max(n_items - 1, 0) * gap


def assemble_diversity_sequence(
    entries: list[MedoidEntry],
    clips: Mapping[str, np.ndarray],
    system_id: str,
    category: str,
    token: str,
    gap_seconds: float = GAP_SECONDS,
) -> DiversitySequence:
    """Concatenate medoid clips in cluster order with silence between items."""
    gap = np.zeros(int(round(gap_seconds * TARGET_RATE)), dtype=np.int16)
    parts = []
    for i, entry in enumerate(entries):
        if entry.clip_id not in clips:
            raise SelectError(f"missing clip {entry.clip_id!r} for {system_id}/{category}")
        samples = np.asarray(clips[entry.clip_id])
        if samples.dtype != np.int16 or samples.shape != (TARGET_SAMPLES,):
            raise SelectError(
                f"clip {entry.clip_id!r} is not a conforming mono int16 clip"
            )
        if i:
            parts.append(gap)
        parts.append(samples)
    return DiversitySequence(
        system_id=system_id,
        category=category,
        token=token,
        samples=np.concatenate(parts) if parts else np.zeros(0, dtype=np.int16),
    )


def obfuscation_tokens(keys: list, seed: int) -> dict:
    """Seeded 8-character lower-case alphanumeric token per key, collision-free."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x0BF5])))
    out = {}
    used = set()
    for key in keys:
        while True:
            idx = rng.integers(0, len(TOKEN_ALPHABET), size=TOKEN_LENGTH)
            token = "".join(TOKEN_ALPHABET[i] for i in idx)
            if token not in used:
                break
        used.add(token)
        out[key] = token
    return out


def write_sealed_map(path: str, sequences: list[DiversitySequence]) -> None:
    """Write the token -> system mapping with owner-only permissions."""
    mapping = {
        seq.token: {"system_id": seq.system_id, "category": seq.category}
        for seq in sequences
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mapping, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.chmod(path, 0o600)
