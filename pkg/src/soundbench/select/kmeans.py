"""Seeded k-means with k-means++ initialization and restart selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RESTARTS = 10
MAX_ITERATIONS = 300
RELATIVE_TOL = 1e-6


class SelectError(ValueError):
    pass


@dataclass
class KMeansResult:
    centroids: np.ndarray  # (k, dim)
    assignment: np.ndarray  # (n,) cluster index per row
    inertia: float
    iterations: int
    seed: int
    history: list[float] = field(default_factory=list)  # inertia per iteration

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _squared_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _init_plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[int(rng.integers(n))]
    d2 = np.einsum("nd,nd->n", x - centroids[0], x - centroids[0])
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            # inverse-CDF draw proportional to squared distance
            cum = np.cumsum(d2)
            idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centroids[i] = x[idx]
        step = x - centroids[i]
        d2 = np.minimum(d2, np.einsum("nd,nd->n", step, step))
    return centroids


def _lloyd(
    x: np.ndarray, k: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, float, int, list[float]]:
    n = x.shape[0]
    centroids = _init_plus_plus(x, k, rng)
    previous = np.inf
    history: list[float] = []
    assignment = np.zeros(n, dtype=np.int64)
    inertia = 0.0
    iterations = 0

    for iteration in range(1, MAX_ITERATIONS + 1):
        iterations = iteration
        d2 = _squared_distances(x, centroids)
        assignment = np.argmin(d2, axis=1)
        dmin = d2[np.arange(n), assignment]

        # repair empty clusters with the point currently farthest from
        # its centroid; that point becomes the cluster
        for c in range(k):
            if not np.any(assignment == c):
                far = int(np.argmax(dmin))
                assignment[far] = c
                centroids[c] = x[far]
                dmin[far] = 0.0

        inertia = float(dmin.sum())
        history.append(inertia)
        assert inertia <= previous * (1 + 1e-12) + 1e-12, (
            f"inertia increased: {previous} -> {inertia}"
        )
        if previous != np.inf and previous - inertia <= RELATIVE_TOL * max(previous, 1e-300):
            break
        if inertia == 0.0:
            break
        previous = inertia

        for c in range(k):
            centroids[c] = x[assignment == c].mean(axis=0)

    return centroids, assignment, inertia, iterations, history


def kmeans(vectors: np.ndarray, k: int, seed: int) -> KMeansResult:
    """Cluster rows into k groups, keeping the best of 10 seeded restarts.

    Deterministic for a given (vectors, k, seed): restart PRNGs are spawned
    from one seed sequence and the lowest-inertia restart wins, first on tie.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise SelectError(f"expected a 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise SelectError("input vectors contain non-finite values")
    n = x.shape[0]
    if k < 1:
        raise SelectError(f"k must be positive, got {k}")
    if n < k:
        raise SelectError(f"cannot form {k} clusters from {n} points")

    best = None
    for child in np.random.SeedSequence(seed).spawn(RESTARTS):
        rng = np.random.Generator(np.random.PCG64(child))
        centroids, assignment, inertia, iterations, history = _lloyd(x, k, rng)
        if best is None or inertia < best[2]:
            best = (centroids, assignment, inertia, iterations, history)
        if best[2] == 0.0:
            break

    centroids, assignment, inertia, iterations, history = best
    return KMeansResult(
        centroids=centroids,
        assignment=assignment,
        inertia=inertia,
        iterations=iterations,
        seed=seed,
        history=history,
    )
