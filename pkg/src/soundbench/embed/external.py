"""Import of externally computed per-clip embedding files.

Exchange format: one ``<clip_id>.femb`` file per clip, each in the standard
binary layout with a single clip.  The harness never runs model inference;
neural embeddings arrive exclusively through this path.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .store import EmbedderSpec, EmbeddingFormatError, EmbeddingMatrix, read_embeddings


class ImportError_(ValueError):
    """Raised for missing clips, dimension mismatches, or non-finite vectors."""


def import_external_embeddings(
    directory: str | Path,
    spec: EmbedderSpec,
    clip_ids: Sequence[str],
    categories: Optional[Sequence[str]] = None,
    label: str = "",
) -> EmbeddingMatrix:
    """Assemble one EmbeddingMatrix from per-clip files, checking coverage.

    Every clip in `clip_ids` must have a `<clip_id>.femb` file of matching
    dimension; NaN/Inf entries are rejected naming the clip and row.
    """
    directory = Path(directory)
    blocks: list[np.ndarray] = []
    frames: list[int] = []
    for clip_id in clip_ids:
        path = directory / f"{clip_id}.femb"
        if not path.is_file():
            raise ImportError_(f"missing embedding file for clip {clip_id!r}: {path}")
        try:
            single = read_embeddings(path)
        except EmbeddingFormatError as exc:
            raise ImportError_(f"clip {clip_id!r}: {exc}") from None
        if single.spec.dim != spec.dim:
            raise ImportError_(
                f"clip {clip_id!r}: dimension {single.spec.dim} != expected {spec.dim}"
            )
        blocks.append(single.vectors)
        frames.append(single.vectors.shape[0])
    vectors = (
        np.concatenate(blocks) if blocks else np.empty((0, spec.dim), dtype=np.float32)
    )
    return EmbeddingMatrix(
        spec=spec,
        clip_ids=list(clip_ids),
        frames_per_clip=frames,
        vectors=vectors,
        label=label,
        categories=list(categories) if categories is not None else None,
    )
