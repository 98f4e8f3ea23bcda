"""Medoid selection: the in-cluster clip nearest its centroid."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..embed.store import EmbeddingMatrix
from .kmeans import KMeansResult, SelectError, kmeans


@dataclass
class MedoidEntry:
    cluster: int
    clip_id: str
    distance: float  # Euclidean distance to the cluster centroid


@dataclass
class MedoidSet:
    """Ordered medoid lists keyed by (system_id, category)."""

    entries: dict[tuple[str, str], list[MedoidEntry]] = field(default_factory=dict)

    def clip_ids(self, system_id: str, category: str) -> list[str]:
        return [e.clip_id for e in self.entries[(system_id, category)]]

    def as_rows(self) -> list[tuple[str, str, int, str, float]]:
        rows = []
        for (system_id, category) in sorted(self.entries):
            for e in self.entries[(system_id, category)]:
                rows.append((system_id, category, e.cluster, e.clip_id, e.distance))
        return rows


def select_medoids(
    km: KMeansResult, vectors: np.ndarray, clip_ids: list[str]
) -> list[MedoidEntry]:
    """One medoid per cluster: minimal distance to centroid, ordered by
    cluster index, exact-distance ties broken by smallest clip_id."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.shape[0] != len(clip_ids):
        raise SelectError(
            f"{x.shape[0]} vectors but {len(clip_ids)} clip ids"
        )
    if km.assignment.shape[0] != x.shape[0]:
        raise SelectError(
            f"assignment covers {km.assignment.shape[0]} rows, vectors have {x.shape[0]}"
        )

    out = []
    for c in range(km.k):
        members = np.flatnonzero(km.assignment == c)
        if members.size == 0:
            raise SelectError(f"cluster {c} is empty")
        dists = np.linalg.norm(x[members] - km.centroids[c], axis=1)
        dmin = float(dists.min())
        candidates = [clip_ids[members[i]] for i in np.flatnonzero(dists == dmin)]
        out.append(MedoidEntry(cluster=c, clip_id=min(candidates), distance=dmin))
    return out


def _job_seed(seed: int, system_id: str, category: str) -> int:
    """Stable per-job seed independent of job iteration order."""
    digest = hashlib.sha256(f"{seed}:{system_id}:{category}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def medoids_for_systems(
    embeddings: dict[str, EmbeddingMatrix], k: int, seed: int
) -> MedoidSet:
    """Cluster each (system, category) group and pick its medoids.

    Frame-level embeddings are mean-pooled to one vector per clip before
    clustering, so every medoid is a whole clip.
    """
    medoid_set = MedoidSet()
    for system_id in sorted(embeddings):
        emb = embeddings[system_id]
        if not emb.categories:
            raise SelectError(f"system {system_id!r} embeddings carry no categories")
        by_category: dict[str, list[str]] = {}
        for clip_id, category in zip(emb.clip_ids, emb.categories):
            by_category.setdefault(category, []).append(clip_id)
        pooled = emb.clip_vectors()
        vectors_by_clip = {cid: pooled[i] for i, cid in enumerate(emb.clip_ids)}
        for category in sorted(by_category):
            clip_ids = sorted(by_category[category])
            x = np.stack([vectors_by_clip[cid] for cid in clip_ids])
            km = kmeans(x, k, _job_seed(seed, system_id, category))
            medoid_set.entries[(system_id, category)] = select_medoids(
                km, x, clip_ids
            )
    return medoid_set
