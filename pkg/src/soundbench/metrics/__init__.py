from .correlation import RankCorrelation, correlate, fractional_ranks, pearson, spearman
from .fad import (
    FadResult,
    FadTable,
    category_gaussians,
    fad_against_reference,
    fad_table,
    top_k_by_average,
)
from .gaussian import (
    GaussianStats,
    MetricError,
    fit_gaussian,
    frechet_distance,
    sqrtm_psd,
)

__all__ = [
    "FadResult",
    "FadTable",
    "GaussianStats",
    "MetricError",
    "RankCorrelation",
    "category_gaussians",
    "correlate",
    "fad_against_reference",
    "fad_table",
    "fit_gaussian",
    "fractional_ranks",
    "frechet_distance",
    "pearson",
    "sqrtm_psd",
    "spearman",
    "top_k_by_average",
]
