"""Per-category FAD tables and screening by average distance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..embed.store import EmbeddingMatrix
from .gaussian import MetricError, fit_gaussian, frechet_distance


@dataclass
class FadResult:
    """FAD of one system against one reference set, per category plus average."""

    system_id: str
    reference_tag: str
    per_category: dict[str, float]
    average: float
    embedder_id: str = ""

    def as_dict(self) -> dict:
        return {
            "system_id": self.system_id,
            "reference_tag": self.reference_tag,
            "embedder_id": self.embedder_id,
            "per_category": dict(sorted(self.per_category.items())),
            "average": self.average,
        }


@dataclass
class FadTable:
    reference_tag: str
    categories: list[str]
    results: list[FadResult] = field(default_factory=list)

    def by_system(self) -> dict[str, FadResult]:
        return {r.system_id: r for r in self.results}


def category_gaussians(emb: EmbeddingMatrix) -> dict[str, object]:
    """Fit one Gaussian per category from frame-level rows."""
    if not emb.categories:
        raise MetricError("embedding matrix carries no category labels")
    out = {}
    for category, sub in emb.group_by_category().items():
        out[category] = fit_gaussian(sub.vectors.astype(np.float64))
    return out


def fad_against_reference(
    system_id: str,
    system_emb: EmbeddingMatrix,
    reference_gaussians: dict[str, object],
    reference_tag: str,
) -> FadResult:
    """Per-category FAD of one system against prefit reference Gaussians.

    Categories must match the reference exactly; the average is the
    unweighted mean over categories.
    """
    system_gaussians = category_gaussians(system_emb)
    missing = sorted(set(reference_gaussians) - set(system_gaussians))
    extra = sorted(set(system_gaussians) - set(reference_gaussians))
    if missing or extra:
        raise MetricError(
            f"system {system_id!r} category mismatch: missing {missing}, extra {extra}"
        )
    per_category = {}
    for category in sorted(reference_gaussians):
        per_category[category] = frechet_distance(
            system_gaussians[category], reference_gaussians[category]
        )
    average = float(np.mean(list(per_category.values())))
    return FadResult(
        system_id=system_id,
        reference_tag=reference_tag,
        per_category=per_category,
        average=average,
        embedder_id=system_emb.spec.model_id,
    )


def fad_table(
    systems: dict[str, EmbeddingMatrix],
    reference: EmbeddingMatrix,
    reference_tag: str,
) -> FadTable:
    """FAD of every system against one reference embedding set."""
    ref_gaussians = category_gaussians(reference)
    table = FadTable(reference_tag=reference_tag, categories=sorted(ref_gaussians))
    for system_id in sorted(systems):
        emb = systems[system_id]
        if emb.spec.model_id != reference.spec.model_id:
            raise MetricError(
                f"system {system_id!r} embedder {emb.spec.model_id!r} does not match "
                f"reference embedder {reference.spec.model_id!r}"
            )
        table.results.append(
            fad_against_reference(system_id, emb, ref_gaussians, reference_tag)
        )
    return table


def top_k_by_average(results: list[FadResult], k: int) -> list[FadResult]:
    """The k results with lowest average FAD, ties broken by system id.

    All results must target the same reference set.
    """
    if k < 1:
        raise MetricError(f"k must be positive, got {k}")
    tags = {r.reference_tag for r in results}
    if len(tags) > 1:
        raise MetricError(f"mixed reference tags in one screening: {sorted(tags)}")
    ranked = sorted(results, key=lambda r: (r.average, r.system_id))
    return ranked[:k]
