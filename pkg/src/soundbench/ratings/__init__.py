from .aggregate import AggregateScore, CategoryScore, aggregate
from .exclusions import (
    HIGH_POLE_MIN,
    LOW_POLE_MAX,
    MISRATING_THRESHOLD,
    AnchorJudgment,
    ExclusionReport,
    SessionExclusion,
    apply_exclusions,
    judge_anchors,
)
from .rank import (
    DEFAULT_WEIGHTS,
    FinalRanking,
    RankedSystem,
    combined_score,
    final_rank,
)
from .records import (
    SCALE_MAX,
    SCALE_MIN,
    IngestResult,
    RatingError,
    RatingRecord,
    ingest_ratings,
)
from .report import correlation_report, fig1_rows, fig2_rows

__all__ = [
    "DEFAULT_WEIGHTS",
    "HIGH_POLE_MIN",
    "LOW_POLE_MAX",
    "MISRATING_THRESHOLD",
    "SCALE_MAX",
    "SCALE_MIN",
    "AggregateScore",
    "AnchorJudgment",
    "CategoryScore",
    "ExclusionReport",
    "FinalRanking",
    "IngestResult",
    "RankedSystem",
    "RatingError",
    "RatingRecord",
    "SessionExclusion",
    "aggregate",
    "apply_exclusions",
    "combined_score",
    "correlation_report",
    "fig1_rows",
    "fig2_rows",
    "final_rank",
    "ingest_ratings",
    "judge_anchors",
]
