"""Weighted final ranking with FAD tie-breaking."""

from __future__ import annotations

from dataclasses import dataclass, field

from .aggregate import AggregateScore
from .records import RatingError

DEFAULT_WEIGHTS = (1.0, 1.0, 0.5)


@dataclass
class RankedSystem:
    system_id: str
    track: str
    rank: int  # 1-based within track
    combined: float | None
    quality: float | None
    fit: float | None
    diversity: float | None
    fad_eval: float | None = None
    note: str = ""  # tie-break trace or missing-data explanation


@dataclass
class FinalRanking:
    weights: tuple
    tracks: dict[str, list[RankedSystem]] = field(default_factory=dict)

    def all_systems(self) -> list[RankedSystem]:
        out = []
        for track in sorted(self.tracks):
            out.extend(self.tracks[track])
        return out


def combined_score(
    quality: float, fit: float, diversity: float, weights=DEFAULT_WEIGHTS
) -> float:
    wq, wf, wd = weights
    return (wq * quality + wf * fit + wd * diversity) / (wq + wf + wd)


def final_rank(
    aggregates: list[AggregateScore],
    weights: tuple = DEFAULT_WEIGHTS,
    fad_eval: dict[str, float] | None = None,
) -> FinalRanking:
    """Descending combined score per track; exact ties go to the system
    with lower average FAD on the evaluation set, then the smaller id.

    A system missing any component or category is ranked below all fully
    scored systems, with the gap named instead of imputed.
    """
    if len(weights) != 3 or any(w <= 0 for w in weights):
        raise RatingError(f"weights must be three positive numbers, got {weights}")
    fad_eval = fad_eval or {}

    by_track: dict[str, list[AggregateScore]] = {}
    for agg in aggregates:
        by_track.setdefault(agg.track, []).append(agg)

    ranking = FinalRanking(weights=tuple(weights))
    for track in sorted(by_track):
        complete: list[tuple] = []
        incomplete: list[tuple] = []
        for agg in by_track[track]:
            q, f, d = agg.quality, agg.fit, agg.diversity
            gaps = []
            if agg.missing_categories:
                gaps.append(f"no ratings in {', '.join(agg.missing_categories)}")
            for name, value in (("quality", q), ("fit", f), ("diversity", d)):
                if value is None:
                    gaps.append(f"no {name} score")
            if gaps:
                incomplete.append((agg, "; ".join(gaps)))
            else:
                complete.append((agg, combined_score(q, f, d, weights)))

        def sort_key(item):
            agg, combined = item
            return (-combined, fad_eval.get(agg.system_id, float("inf")), agg.system_id)

        complete.sort(key=sort_key)
        incomplete.sort(key=lambda item: item[0].system_id)

        ranked: list[RankedSystem] = []
        for agg, combined in complete:
            ranked.append(
                RankedSystem(
                    system_id=agg.system_id,
                    track=track,
                    rank=len(ranked) + 1,
                    combined=combined,
                    quality=agg.quality,
                    fit=agg.fit,
                    diversity=agg.diversity,
                    fad_eval=fad_eval.get(agg.system_id),
                )
            )
        # annotate exact-score ties with the applied tie-break
        for i, entry in enumerate(ranked):
            peers = [
                r
                for j, r in enumerate(ranked)
                if j != i and r.combined == entry.combined
            ]
            if not peers:
                continue
            if entry.fad_eval is not None and any(
                p.fad_eval is None or p.fad_eval != entry.fad_eval for p in peers
            ):
                entry.note = (
                    f"combined tied with {', '.join(p.system_id for p in peers)}; "
                    f"ordered by lower FAD-Eval ({entry.fad_eval:g})"
                )
            else:
                entry.note = (
                    f"combined tied with {', '.join(p.system_id for p in peers)}; "
                    "ordered by system id"
                )

        for agg, gap in incomplete:
            ranked.append(
                RankedSystem(
                    system_id=agg.system_id,
                    track=track,
                    rank=len(ranked) + 1,
                    combined=None,
                    quality=agg.quality,
                    fit=agg.fit,
                    diversity=agg.diversity,
                    fad_eval=fad_eval.get(agg.system_id),
                    note=f"ranked last: {gap}",
                )
            )
        ranking.tracks[track] = ranked
    return ranking
