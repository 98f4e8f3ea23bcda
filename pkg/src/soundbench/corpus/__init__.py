from .manifest import (
    Manifest,
    ManifestEntry,
    ManifestError,
    SplitReport,
    load_manifest,
    manifest_pcm_hashes,
    pcm_hash,
    validate_split,
)
from .preprocess import (
    TARGET_RATE,
    TARGET_SAMPLES,
    AudioClip,
    PreprocessError,
    preprocess_clip,
    resample,
)
from .submission import SubmissionReport, SubmissionSet, validate_submission

__all__ = [
    "AudioClip",
    "Manifest",
    "ManifestEntry",
    "ManifestError",
    "PreprocessError",
    "SplitReport",
    "SubmissionReport",
    "SubmissionSet",
    "TARGET_RATE",
    "TARGET_SAMPLES",
    "load_manifest",
    "manifest_pcm_hashes",
    "pcm_hash",
    "preprocess_clip",
    "resample",
    "validate_split",
    "validate_submission",
]
