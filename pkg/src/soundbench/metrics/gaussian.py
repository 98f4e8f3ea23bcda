"""Gaussian statistics, PSD matrix square root, and the Fréchet distance.

The distance between two fitted Gaussians (m1, C1) and (m2, C2) is

    ||m1 - m2||^2 + tr(C1 + C2 - 2 * (C1 C2)^(1/2))

with the cross term computed through the symmetric form
sqrtm(sqrt(C1) * C2 * sqrt(C1)), which keeps every eigendecomposition
symmetric.  All reductions run in 64-bit floats with pairwise summation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_ATOL = 1e-12
EIG_CLAMP_REL = 1e-10
REGULARIZATION_REL = 1e-6
NEGATIVE_DISTANCE_TOL = 1e-8


class MetricError(ValueError):
    pass


@dataclass
class GaussianStats:
    mean: np.ndarray  # (dim,)
    covariance: np.ndarray  # (dim, dim), symmetric
    sample_count: int
    regularization: float = 0.0  # epsilon added to the diagonal, 0 if none

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_gaussian(rows: np.ndarray) -> GaussianStats:
    """Fit mean and unbiased covariance to embedding rows, regularizing
    near-singular covariances by adding eps*I with eps = 1e-6 * trace/dim.

    Requires n >= 2 finite rows.  The covariance is symmetrized as
    (C + C^T)/2 before the eigenvalue check.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise MetricError(f"expected a 2-D row matrix, got shape {rows.shape}")
    n, dim = rows.shape
    if n < 2:
        raise MetricError(f"need at least 2 rows to fit a Gaussian, got {n}")
    if not np.all(np.isfinite(rows)):
        raise MetricError("input rows contain non-finite values")

    mean = rows.mean(axis=0)
    centered = rows - mean
    cov = (centered.T @ centered) / (n - 1)
    cov = (cov + cov.T) / 2.0

    trace = float(np.trace(cov))
    eps = 0.0
    smallest = float(np.linalg.eigvalsh(cov)[0])
    if smallest < EIG_CLAMP_REL * trace / dim:
        eps = REGULARIZATION_REL * trace / dim
        cov = cov + eps * np.eye(dim)
    return GaussianStats(mean=mean, covariance=cov, sample_count=n, regularization=eps)


def sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-10 * max_eig, 0) are clamped to zero; anything more
    negative, or asymmetry beyond tolerance, is an error.
    """
    s = np.asarray(matrix, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise MetricError(f"expected a square matrix, got shape {s.shape}")
    scale = max(1.0, float(np.abs(s).max()) if s.size else 1.0)
    if float(np.abs(s - s.T).max()) > SYMMETRY_ATOL * scale:
        raise MetricError("matrix is not symmetric within tolerance")

    eigvals, eigvecs = np.linalg.eigh((s + s.T) / 2.0)
    max_eig = float(eigvals[-1]) if eigvals.size else 0.0
    floor = -EIG_CLAMP_REL * max(max_eig, 0.0)
    if eigvals.size and float(eigvals[0]) < floor:
        raise MetricError(
            f"matrix is not PSD: eigenvalue {float(eigvals[0]):.3e} below {floor:.3e}"
        )
    root = eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    return (root + root.T) / 2.0


def frechet_distance(g1: GaussianStats, g2: GaussianStats) -> float:
    """Fréchet distance between two fitted Gaussians (non-negative)."""
    if g1.dim != g2.dim:
        raise MetricError(f"dimension mismatch: {g1.dim} vs {g2.dim}")

    diff = g1.mean - g2.mean
    mean_term = float(np.dot(diff, diff))

    root1 = sqrtm_psd(g1.covariance)
    inner = root1 @ g2.covariance @ root1
    cross = sqrtm_psd((inner + inner.T) / 2.0)

    value = (
        mean_term
        + float(np.trace(g1.covariance))
        + float(np.trace(g2.covariance))
        - 2.0 * float(np.trace(cross))
    )
    if value < -NEGATIVE_DISTANCE_TOL:
        raise MetricError(f"distance {value:.3e} is negative beyond tolerance")
    return max(value, 0.0)
