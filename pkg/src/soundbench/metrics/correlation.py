"""Pearson and Spearman correlation over paired score sequences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gaussian import MetricError


@dataclass
class RankCorrelation:
    pearson_r: float
    spearman_rho: float
    n: int


def _check_pair(x: np.ndarray, y: np.ndarray) -> None:
    if x.ndim != 1 or y.ndim != 1:
        raise MetricError("correlation inputs must be 1-D")
    if x.shape[0] != y.shape[0]:
        raise MetricError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.shape[0] < 2:
        raise MetricError(f"need at least 2 pairs, got {x.shape[0]}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise MetricError("correlation inputs contain non-finite values")


def pearson(x, y) -> float:
    """Product-moment correlation; errors when either input is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(np.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))
    if denom == 0.0:
        raise MetricError("correlation undefined for a constant input")
    return float(np.dot(xc, yc) / denom)


def fractional_ranks(x) -> np.ndarray:
    """1-based ranks with ties sharing the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.shape[0], dtype=np.float64)
    i = 0
    while i < x.shape[0]:
        j = i
        while j + 1 < x.shape[0] and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Rank correlation: Pearson over fractional ranks of both inputs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_pair(x, y)
    return pearson(fractional_ranks(x), fractional_ranks(y))


def correlate(x, y) -> RankCorrelation:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return RankCorrelation(
        pearson_r=pearson(x, y), spearman_rho=spearman(x, y), n=int(x.shape[0])
    )
