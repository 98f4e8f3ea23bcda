"""Correlation analyses and figure-data extraction."""

from __future__ import annotations

import numpy as np

from ..metrics.correlation import pearson, spearman
from ..metrics.fad import FadTable
from ..metrics.gaussian import MetricError
from ..trials.plan import PlanBundle
from .aggregate import AggregateScore
from .rank import FinalRanking
from .records import RatingRecord


def _safe_pair(fn, x, y) -> float | None:
    """None instead of an error for degenerate inputs (too few pairs or a
    constant sequence); the report marks these rather than failing."""
    try:
        return fn(x, y)
    except MetricError:
        return None


def _fad_vs_final(ranking: FinalRanking, fad_avg: dict[str, float]) -> dict | None:
    systems = [
        r for r in ranking.all_systems() if r.combined is not None and r.system_id in fad_avg
    ]
    if len(systems) < 2:
        return None
    fad = [fad_avg[r.system_id] for r in systems]
    combined = [-r.combined for r in systems]  # descending score = ascending rank
    rho = _safe_pair(spearman, fad, combined)
    if rho is None:
        return None
    return {"spearman": rho, "n": len(systems)}


def correlation_report(
    aggregates: list[AggregateScore],
    records: list[RatingRecord],
    plan: PlanBundle,
    ranking: FinalRanking,
    fad_dev: dict[str, float] | None = None,
    fad_eval: dict[str, float] | None = None,
) -> dict:
    """Agreement statistics between FAD screening and human judgments.

    Covers rank agreement of each FAD table with the final ranking,
    quality-versus-fit correlation at system and trial level, and the
    relationship of diversity to fit.
    """
    report: dict = {"fad_vs_final": {}}
    report["fad_vs_final"]["eval"] = (
        _fad_vs_final(ranking, fad_eval) if fad_eval else None
    )
    report["fad_vs_final"]["dev"] = _fad_vs_final(ranking, fad_dev) if fad_dev else None

    # system-level quality vs fit per category, across systems
    categories = sorted({c for agg in aggregates for c in agg.per_category})
    system_level: dict[str, float | None] = {}
    for category in categories:
        qs, fs = [], []
        for agg in aggregates:
            cell = agg.per_category.get(category)
            if cell is not None and cell.quality is not None:
                qs.append(cell.quality)
                fs.append(cell.fit)
        system_level[category] = _safe_pair(pearson, qs, fs) if len(qs) >= 2 else None
    present = [v for v in system_level.values() if v is not None]
    report["quality_fit_system_level"] = {
        "per_category": system_level,
        "average": float(np.mean(present)) if present else None,
    }

    # trial-level quality vs fit per category, across retained records
    trial_level: dict[str, float | None] = {}
    for category in categories:
        pairs = [
            (r.quality, r.fit)
            for r in records
            if r.category == category and not r.is_diversity
        ]
        if len(pairs) >= 2:
            q, f = zip(*pairs)
            trial_level[category] = _safe_pair(pearson, q, f)
        else:
            trial_level[category] = None
    present = [v for v in trial_level.values() if v is not None]
    report["quality_fit_trial_level"] = {
        "per_category": trial_level,
        "average": float(np.mean(present)) if present else None,
    }

    # per-system diversity vs fit, overall means
    ds, fs = [], []
    for agg in aggregates:
        if agg.diversity is not None and agg.fit is not None:
            ds.append(agg.diversity)
            fs.append(agg.fit)
    value = _safe_pair(pearson, ds, fs) if len(ds) >= 2 else None
    report["diversity_vs_fit"] = (
        {"pearson": value, "n": len(ds)} if value is not None else None
    )
    return report


def fig1_rows(fad_dev: FadTable, fad_eval: FadTable) -> list[dict]:
    """Scatter points: per-system average FAD on dev vs eval with the
    spread over categories."""
    dev = fad_dev.by_system()
    ev = fad_eval.by_system()
    rows = []
    for system_id in sorted(set(dev) & set(ev)):
        d = np.asarray(list(dev[system_id].per_category.values()), dtype=np.float64)
        e = np.asarray(list(ev[system_id].per_category.values()), dtype=np.float64)
        rows.append(
            {
                "system_id": system_id,
                "fad_dev_avg": dev[system_id].average,
                "fad_dev_std": float(d.std()),
                "fad_eval_avg": ev[system_id].average,
                "fad_eval_std": float(e.std()),
            }
        )
    return rows


def fig2_rows(
    ranking: FinalRanking,
    fad_dev: dict[str, float] | None = None,
    fad_eval: dict[str, float] | None = None,
) -> list[dict]:
    """Final rank against FAD averages, one row per ranked system."""
    fad_dev = fad_dev or {}
    fad_eval = fad_eval or {}
    rows = []
    for entry in ranking.all_systems():
        rows.append(
            {
                "system_id": entry.system_id,
                "track": entry.track,
                "final_rank": entry.rank,
                "combined": entry.combined,
                "fad_eval_avg": fad_eval.get(entry.system_id),
                "fad_dev_avg": fad_dev.get(entry.system_id),
            }
        )
    return rows
