"""Manifest loading and split/stratification validation.

The manifest is a UTF-8 CSV with header
``clip_id,path,category,source_recording_id,split,referent,anchor_quality,anchor_fit``.
Paths are resolved relative to the manifest file's directory unless absolute.
"""

from __future__ import annotations

import csv
import hashlib
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..categories import CATEGORIES, UnknownCategoryError, category_code
from ..wavio import WavFormatError, read_wav

VALID_SPLITS = ("development", "evaluation", "submission", "anchor")
MANIFEST_HEADER = [
    "clip_id",
    "path",
    "category",
    "source_recording_id",
    "split",
    "referent",
    "anchor_quality",
    "anchor_fit",
]


class ManifestError(ValueError):
    """Raised for a missing manifest file or an unparseable row."""


@dataclass
class ManifestEntry:
    clip_id: str
    path: Path
    category: str
    source_recording_id: str
    split: str
    referent: bool = False
    anchor_quality: str = ""  # "", "high", "low"
    anchor_fit: str = ""


@dataclass
class Manifest:
    dataset_name: str
    entries: list[ManifestEntry]
    per_category_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.per_category_counts:
            counts = Counter(e.category for e in self.entries)
            self.per_category_counts = {c: counts.get(c, 0) for c in CATEGORIES}

    def by_split(self, split: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == split]

    def by_id(self) -> dict[str, ManifestEntry]:
        return {e.clip_id: e for e in self.entries}

    def referents(self, category: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.category == category and e.referent]

    def anchors(self, category: str) -> list[ManifestEntry]:
        return [
            e
            for e in self.entries
            if e.category == category and e.anchor_quality and e.anchor_fit
        ]


def _parse_flag(value: str, row_num: int, column: str) -> bool:
    if value in ("0", ""):
        return False
    if value == "1":
        return True
    raise ManifestError(f"row {row_num}: {column} must be 0 or 1, got {value!r}")


def _parse_pole(value: str, row_num: int, column: str) -> str:
    if value not in ("", "high", "low"):
        raise ManifestError(
            f"row {row_num}: {column} must be empty, 'high' or 'low', got {value!r}"
        )
    return value


def load_manifest(path: str | Path, dataset_name: str = "") -> Manifest:
    """Parse a manifest CSV, checking categories, splits and clip_id uniqueness.

    Raises ManifestError with the offending row number for malformed rows,
    unknown categories or duplicate clip_ids.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest file not found: {path}")

    base = path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ManifestError(f"{path}: empty manifest")
    header = rows[0]
    if header != MANIFEST_HEADER:
        raise ManifestError(
            f"{path}: bad header {header!r}; expected {','.join(MANIFEST_HEADER)}"
        )
    for row_num, row in enumerate(rows[1:], start=2):
        if len(row) != len(MANIFEST_HEADER):
            raise ManifestError(
                f"row {row_num}: expected {len(MANIFEST_HEADER)} fields, got {len(row)}"
            )
        clip_id, rel_path, category, source, split, referent, aq, af = row
        try:
            category_code(category)
        except UnknownCategoryError as exc:
            raise ManifestError(f"row {row_num}: {exc}") from None
        if split not in VALID_SPLITS:
            raise ManifestError(
                f"row {row_num}: split must be one of {VALID_SPLITS}, got {split!r}"
            )
        if not clip_id:
            raise ManifestError(f"row {row_num}: empty clip_id")
        if clip_id in seen:
            raise ManifestError(f"row {row_num}: duplicate clip_id {clip_id!r}")
        seen.add(clip_id)
        p = Path(rel_path)
        entries.append(
            ManifestEntry(
                clip_id=clip_id,
                path=p if p.is_absolute() else base / p,
                category=category,
                source_recording_id=source,
                split=split,
                referent=_parse_flag(referent, row_num, "referent"),
                anchor_quality=_parse_pole(aq, row_num, "anchor_quality"),
                anchor_fit=_parse_pole(af, row_num, "anchor_fit"),
            )
        )
    return Manifest(dataset_name=dataset_name or path.stem, entries=entries)


@dataclass
class SplitViolation:
    kind: str  # "source_overlap" | "category_count"
    detail: str


@dataclass
class SplitReport:
    violations: list[SplitViolation]
    eval_counts: dict[str, int]
    development_total: int

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_split(manifest: Manifest, expected_eval_count: int = 100) -> SplitReport:
    """Check the no-shared-source constraint and per-category evaluation counts.

    Violations are report content, not exceptions: a source_recording_id with
    clips in both development and evaluation splits, or an evaluation category
    whose clip count differs from the configured target.
    """
    dev = manifest.by_split("development")
    eva = manifest.by_split("evaluation")

    violations: list[SplitViolation] = []
    dev_sources: dict[str, list[str]] = {}
    for e in dev:
        dev_sources.setdefault(e.source_recording_id, []).append(e.clip_id)
    for e in eva:
        if e.source_recording_id in dev_sources:
            clips = dev_sources[e.source_recording_id]
            violations.append(
                SplitViolation(
                    kind="source_overlap",
                    detail=(
                        f"source {e.source_recording_id!r} appears in both splits: "
                        f"evaluation clip {e.clip_id!r}, development clips {clips!r}"
                    ),
                )
            )

    eval_counts = Counter(e.category for e in eva)
    present = {c for c in CATEGORIES if manifest.per_category_counts.get(c, 0) > 0}
    for category in sorted(present, key=category_code):
        n = eval_counts.get(category, 0)
        if n != expected_eval_count:
            violations.append(
                SplitViolation(
                    kind="category_count",
                    detail=(
                        f"evaluation split has {n} {category} clips, "
                        f"expected {expected_eval_count}"
                    ),
                )
            )

    return SplitReport(
        violations=violations,
        eval_counts={c: eval_counts.get(c, 0) for c in CATEGORIES},
        development_total=len(dev),
    )


def pcm_hash(samples) -> str:
    """Content hash of preprocessed int16 PCM, for exact-duplicate detection."""
    import numpy as np

    return hashlib.sha256(np.asarray(samples, dtype="<i2").tobytes()).hexdigest()


def manifest_pcm_hashes(manifest: Manifest, split: str = "development") -> dict[str, str]:
    """Map content hash -> clip_id for every readable clip in a split."""
    hashes: dict[str, str] = {}
    for entry in manifest.by_split(split):
        try:
            decoded = read_wav(entry.path)
        except (OSError, WavFormatError):
            continue
        from ..wavio import encode_int16

        hashes[pcm_hash(encode_int16(decoded.samples[:, 0]))] = entry.clip_id
    return hashes
