"""Rating-record schema and JSONL ingestion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..trials.plan import PlanBundle

SCALE_MIN = 0
SCALE_MAX = 10


class RatingError(ValueError):
    pass


@dataclass
class RatingRecord:
    session_id: str
    rater_id: str
    category: str
    trial_id: str
    clip_token: str
    team_id: str = ""
    quality: int | None = None
    fit: int | None = None
    diversity: int | None = None
    listen_count: int = 1
    timestamp: str = ""

    def __post_init__(self):
        has_qf = self.quality is not None or self.fit is not None
        if has_qf and (self.quality is None or self.fit is None):
            raise RatingError(
                f"trial {self.trial_id!r}: quality and fit must be rated together"
            )
        if has_qf and self.diversity is not None:
            raise RatingError(
                f"trial {self.trial_id!r}: quality/fit and diversity are exclusive"
            )
        if not has_qf and self.diversity is None:
            raise RatingError(f"trial {self.trial_id!r}: no scale value present")
        for name, value in (
            ("quality", self.quality),
            ("fit", self.fit),
            ("diversity", self.diversity),
        ):
            if value is None:
                continue
            if not isinstance(value, int) or isinstance(value, bool):
                raise RatingError(f"trial {self.trial_id!r}: {name} must be an integer")
            if not (SCALE_MIN <= value <= SCALE_MAX):
                raise RatingError(
                    f"trial {self.trial_id!r}: {name}={value} outside "
                    f"[{SCALE_MIN}, {SCALE_MAX}]"
                )
        if self.listen_count < 1:
            raise RatingError(
                f"trial {self.trial_id!r}: listen_count must be at least 1"
            )

    @property
    def is_diversity(self) -> bool:
        return self.diversity is not None

    def as_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "rater_id": self.rater_id,
            "team_id": self.team_id,
            "category": self.category,
            "trial_id": self.trial_id,
            "clip_token": self.clip_token,
            "quality": self.quality,
            "fit": self.fit,
            "diversity": self.diversity,
            "listen_count": self.listen_count,
            "timestamp": self.timestamp,
        }


_REQUIRED_KEYS = ("session_id", "rater_id", "category", "trial_id", "clip_token")


def _parse_line(obj: dict, line_no: int) -> RatingRecord | None:
    """One JSONL object to a record; returns None for scale-free
    acknowledgment lines (referents and break markers)."""
    for key in _REQUIRED_KEYS:
        if key not in obj or not isinstance(obj[key], str):
            raise RatingError(f"line {line_no}: missing or non-string field {key!r}")
    if obj.get("quality") is None and obj.get("fit") is None and obj.get("diversity") is None:
        return None
    try:
        return RatingRecord(
            session_id=obj["session_id"],
            rater_id=obj["rater_id"],
            team_id=obj.get("team_id") or "",
            category=obj["category"],
            trial_id=obj["trial_id"],
            clip_token=obj["clip_token"],
            quality=obj.get("quality"),
            fit=obj.get("fit"),
            diversity=obj.get("diversity"),
            listen_count=obj.get("listen_count", 1),
            timestamp=obj.get("timestamp", ""),
        )
    except RatingError as exc:
        raise RatingError(f"line {line_no}: {exc}") from exc


@dataclass
class IngestResult:
    records: list[RatingRecord]
    duplicates: list[tuple[int, str, str]] = field(default_factory=list)  # line, session, trial
    ack_lines: int = 0


def ingest_ratings(path: str, plan: PlanBundle | None = None) -> IngestResult:
    """Parse a ratings JSONL file, keeping the first of any duplicated
    (session, trial) pair and validating against the sealed plan if given."""
    lookup = plan.trial_lookup() if plan is not None else None
    records: list[RatingRecord] = []
    duplicates: list[tuple[int, str, str]] = []
    seen: set[tuple[str, str]] = set()
    acks = 0

    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RatingError(f"line {line_no}: unreadable JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise RatingError(f"line {line_no}: expected a JSON object")

            record = _parse_line(obj, line_no)
            key = (obj["session_id"], obj["trial_id"])
            if key in seen:
                duplicates.append((line_no, key[0], key[1]))
                continue
            seen.add(key)

            if lookup is not None:
                trial = lookup.get(key)
                if trial is None:
                    raise RatingError(
                        f"line {line_no}: unknown trial {key[1]!r} in session {key[0]!r}"
                    )
                if record is not None:
                    given = tuple(
                        s
                        for s in ("quality", "fit", "diversity")
                        if getattr(record, s) is not None
                    )
                    if given != tuple(trial.scales):
                        raise RatingError(
                            f"line {line_no}: trial {key[1]!r} expects scales "
                            f"{list(trial.scales)}, got {list(given)}"
                        )

            if record is None:
                acks += 1
            else:
                records.append(record)

    return IngestResult(records=records, duplicates=duplicates, ack_lines=acks)
