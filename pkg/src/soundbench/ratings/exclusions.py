"""Session exclusion by anchor mis-rating, plus self-rating removal."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..trials.plan import PlanBundle
from .records import RatingError, RatingRecord

HIGH_POLE_MIN = 6  # a high pole is correctly rated at >= 6
LOW_POLE_MAX = 4  # a low pole is correctly rated at <= 4; 5 mis-rates both
MISRATING_THRESHOLD = 5  # mis-rated anchors that exclude a session


def _pole_ok(pole: str, value: int) -> bool:
    if pole == "high":
        return value >= HIGH_POLE_MIN
    return value <= LOW_POLE_MAX


@dataclass
class AnchorJudgment:
    trial_id: str
    anchor: str  # "<quality_pole>_<fit_pole>"
    quality: int
    fit: int
    mis_rated: bool
    counted: bool  # counts toward exclusion (high-quality-pole anchors by default)


@dataclass
class SessionExclusion:
    session_id: str
    rater_id: str
    mis_rated: int  # among counted anchors
    counted: int
    total_anchors: int
    judgments: list[AnchorJudgment] = field(default_factory=list)


@dataclass
class ExclusionReport:
    excluded: list[SessionExclusion] = field(default_factory=list)
    anchor_records_removed: int = 0
    self_ratings_removed: dict[str, int] = field(default_factory=dict)  # team -> count
    retained: int = 0

    @property
    def excluded_session_ids(self) -> list[str]:
        return [e.session_id for e in self.excluded]


def judge_anchors(
    records: list[RatingRecord], plan: PlanBundle, count_all: bool = False
) -> dict[str, list[AnchorJudgment]]:
    """Per session, the pole-rule verdict for every rated anchor trial.

    An anchor is mis-rated when either scale lands on the wrong side of its
    pole (high needs >= 6, low needs <= 4). Only anchors whose quality pole
    is high count toward exclusion unless count_all is set.
    """
    lookup = plan.trial_lookup()
    out: dict[str, list[AnchorJudgment]] = {}
    for record in records:
        trial = lookup.get((record.session_id, record.trial_id))
        if trial is None:
            raise RatingError(
                f"trial {record.trial_id!r} in session {record.session_id!r} "
                "is not in the sealed plan"
            )
        if not trial.anchor:
            continue
        quality_pole, fit_pole = trial.anchor.split("_")
        mis = not (_pole_ok(quality_pole, record.quality) and _pole_ok(fit_pole, record.fit))
        out.setdefault(record.session_id, []).append(
            AnchorJudgment(
                trial_id=record.trial_id,
                anchor=trial.anchor,
                quality=record.quality,
                fit=record.fit,
                mis_rated=mis,
                counted=count_all or quality_pole == "high",
            )
        )
    return out


def apply_exclusions(
    records: list[RatingRecord],
    plan: PlanBundle,
    finalist_teams: dict[str, str],
    count_all_anchors: bool = False,
) -> tuple[list[RatingRecord], ExclusionReport]:
    """Drop unreliable sessions, then anchor trials, then self-ratings.

    A session is excluded when at least 5 of its counted anchors are
    mis-rated. Self-ratings are records whose rater's team built the rated
    system. Anchor records never reach aggregation either way.
    """
    lookup = plan.trial_lookup()
    judgments = judge_anchors(records, plan, count_all=count_all_anchors)
    report = ExclusionReport()

    excluded_ids = set()
    sessions = plan.session_by_id()
    for session_id in sorted(judgments):
        js = judgments[session_id]
        counted = [j for j in js if j.counted]
        mis = sum(1 for j in counted if j.mis_rated)
        if mis >= MISRATING_THRESHOLD:
            excluded_ids.add(session_id)
            report.excluded.append(
                SessionExclusion(
                    session_id=session_id,
                    rater_id=sessions[session_id].rater_id if session_id in sessions else "",
                    mis_rated=mis,
                    counted=len(counted),
                    total_anchors=len(js),
                    judgments=js,
                )
            )

    retained: list[RatingRecord] = []
    for record in records:
        if record.session_id in excluded_ids:
            continue
        trial = lookup[(record.session_id, record.trial_id)]
        if trial.anchor:
            report.anchor_records_removed += 1
            continue
        team = finalist_teams.get(trial.system_id, "")
        if team and record.team_id and team == record.team_id:
            report.self_ratings_removed[team] = (
                report.self_ratings_removed.get(team, 0) + 1
            )
            continue
        retained.append(record)

    report.retained = len(retained)
    return retained, report
