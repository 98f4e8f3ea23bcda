from .kmeans import KMeansResult, SelectError, kmeans
from .medoids import MedoidEntry, MedoidSet, medoids_for_systems, select_medoids
from .sequence import (
    GAP_SECONDS,
    DiversitySequence,
    assemble_diversity_sequence,
    obfuscation_tokens,
    sequence_length,
    write_sealed_map,
)

__all__ = [
    "GAP_SECONDS",
    "DiversitySequence",
    "KMeansResult",
    "MedoidEntry",
    "MedoidSet",
    "SelectError",
    "assemble_diversity_sequence",
    "kmeans",
    "medoids_for_systems",
    "obfuscation_tokens",
    "select_medoids",
    "sequence_length",
    "write_sealed_map",
]
