"""Aggregation of retained ratings to per-system scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..trials.plan import PlanBundle
from .records import RatingError, RatingRecord


@dataclass
class CategoryScore:
    quality: float | None = None
    fit: float | None = None
    diversity: float | None = None
    rating_count: int = 0
    diversity_count: int = 0


@dataclass
class AggregateScore:
    system_id: str
    track: str
    per_category: dict[str, CategoryScore] = field(default_factory=dict)
    missing_categories: list[str] = field(default_factory=list)

    def _overall(self, attr: str) -> float | None:
        values = [
            getattr(cs, attr)
            for cs in self.per_category.values()
            if getattr(cs, attr) is not None
        ]
        if not values:
            return None
        return float(np.mean(np.asarray(values, dtype=np.float64)))

    @property
    def quality(self) -> float | None:
        return self._overall("quality")

    @property
    def fit(self) -> float | None:
        return self._overall("fit")

    @property
    def diversity(self) -> float | None:
        return self._overall("diversity")


def aggregate(
    records: list[RatingRecord],
    plan: PlanBundle,
    tracks: dict[str, str],
    categories: list[str] | None = None,
) -> list[AggregateScore]:
    """Mean quality/fit per (system, category) plus diversity-file means.

    Input records must already have anchors and self-ratings removed. A
    (system, category) cell with no retained ratings is reported in the
    system's missing_categories rather than invented.
    """
    lookup = plan.trial_lookup()
    quality: dict[tuple[str, str], list[int]] = {}
    fit: dict[tuple[str, str], list[int]] = {}
    diversity: dict[tuple[str, str], list[int]] = {}

    for record in records:
        trial = lookup.get((record.session_id, record.trial_id))
        if trial is None:
            raise RatingError(
                f"trial {record.trial_id!r} in session {record.session_id!r} "
                "is not in the sealed plan"
            )
        if trial.anchor:
            raise RatingError(
                f"anchor record {record.trial_id!r} reached aggregation"
            )
        if not trial.system_id:
            continue
        key = (trial.system_id, record.category)
        if record.is_diversity:
            diversity.setdefault(key, []).append(record.diversity)
        else:
            quality.setdefault(key, []).append(record.quality)
            fit.setdefault(key, []).append(record.fit)

    system_ids = sorted(tracks)
    if categories is None:
        categories = sorted({c for (_, c) in list(quality) + list(diversity)})

    out = []
    for system_id in system_ids:
        score = AggregateScore(system_id=system_id, track=tracks[system_id])
        for category in categories:
            key = (system_id, category)
            cell = CategoryScore()
            if key in quality:
                cell.quality = float(np.mean(np.asarray(quality[key], dtype=np.float64)))
                cell.fit = float(np.mean(np.asarray(fit[key], dtype=np.float64)))
                cell.rating_count = len(quality[key])
            if key in diversity:
                cell.diversity = float(
                    np.mean(np.asarray(diversity[key], dtype=np.float64))
                )
                cell.diversity_count = len(diversity[key])
            if cell.rating_count == 0 and cell.diversity_count == 0:
                score.missing_categories.append(category)
            else:
                score.per_category[category] = cell
        out.append(score)
    return out
