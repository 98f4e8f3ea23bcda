"""Submission-set validation: counts, clip format, and exact-duplicate flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from ..categories import CATEGORIES
from ..wavio import WavFormatError, read_wav
from .manifest import pcm_hash
from .preprocess import TARGET_RATE, TARGET_SAMPLES


class SubmissionError(ValueError):
    """Raised when a submission directory tree cannot be read."""


@dataclass
class SubmissionSet:
    """Generated clips for one system, one directory per category."""

    system_id: str
    track: str
    team_id: str
    root: Path

    @classmethod
    def from_dir(
        cls,
        root: str | Path,
        system_id: str = "",
        track: str = "",
        team_id: str = "",
    ) -> "SubmissionSet":
        root = Path(root)
        if not root.is_dir():
            raise SubmissionError(f"submission directory not found: {root}")
        meta_path = root / "submission.json"
        meta = {}
        if meta_path.is_file():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return cls(
            system_id=system_id or meta.get("system_id", root.name),
            track=track or meta.get("track", "A"),
            team_id=team_id or meta.get("team_id", ""),
            root=root,
        )

    def category_files(self, category: str) -> list[Path]:
        d = self.root / category
        if not d.is_dir():
            return []
        return sorted(p for p in d.iterdir() if p.suffix.lower() == ".wav")


@dataclass
class SubmissionReport:
    system_id: str
    count_violations: list[str] = field(default_factory=list)
    format_violations: list[str] = field(default_factory=list)
    duplicates: list[str] = field(default_factory=list)
    duplicate_check_ran: bool = False

    @property
    def ok(self) -> bool:
        return not (self.count_violations or self.format_violations or self.duplicates)


def validate_submission(
    sub: SubmissionSet,
    expected_per_category: int = 100,
    dev_hashes: Optional[Mapping[str, str]] = None,
) -> SubmissionReport:
    """Check per-category clip counts, clip-format conformance, and duplicates.

    `dev_hashes` maps PCM content hash -> development clip_id; when provided,
    any generated clip whose preprocessed waveform is bit-identical to a
    development clip is flagged with both ids.
    """
    report = SubmissionReport(system_id=sub.system_id, duplicate_check_ran=dev_hashes is not None)
    for category in CATEGORIES:
        files = sub.category_files(category)
        if len(files) != expected_per_category:
            report.count_violations.append(
                f"{category}: {len(files)} clips, expected {expected_per_category}"
            )
        for path in files:
            try:
                decoded = read_wav(path)
            except (OSError, WavFormatError) as exc:
                report.format_violations.append(f"{path.name}: {exc}")
                continue
            if (
                decoded.sample_rate != TARGET_RATE
                or decoded.channels != 1
                or decoded.samples.shape[0] != TARGET_SAMPLES
            ):
                report.format_violations.append(
                    f"{path.name}: got {decoded.channels}ch {decoded.sample_rate}Hz "
                    f"{decoded.samples.shape[0]} samples, need 1ch {TARGET_RATE}Hz "
                    f"{TARGET_SAMPLES} samples"
                )
                continue
            if dev_hashes is not None:
                from ..wavio import encode_int16

                h = pcm_hash(encode_int16(decoded.samples[:, 0]))
                if h in dev_hashes:
                    report.duplicates.append(
                        f"{sub.system_id}/{category}/{path.stem} is bit-identical to "
                        f"development clip {dev_hashes[h]!r}"
                    )
    return report
