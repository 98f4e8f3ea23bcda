"""Self-contained mock challenge used by the end-to-end tests and demos.

Builds a miniature but complete challenge workspace: a reference corpus
manifest with referents and anchors, two submissions with deliberately
different spectral behavior, a systems table, and a rater roster.  Scripted
rater behavior is deterministic, so the final ranking produced by the
pipeline over this fixture is known in advance:

  * `alpha` submits tones close to the reference corpus (low distribution
    distance, high scripted ratings) and wins.
  * `beta` submits noisy inharmonic clips (high distance, low ratings).
  * `r-bad` inverts every anchor rating, tripping the exclusion rule.
  * `r-alpha` shares a team with system alpha, so their alpha ratings are
    removed as self-ratings.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .categories import CATEGORIES, category_code
from .pipeline import PipelineConfig
from .trials.plan import Trial
from .wavio import encode_int16, write_wav_int16

FIXTURE_SEED = 7

SYSTEMS = (
    ("alpha", "A", "team-alpha"),
    ("beta", "A", "team-beta"),
)

BAD_RATER = "r-bad"
SELF_TEAM_RATER = "r-alpha"

RATER_ROWS = (
    ("r-01", "team-r1", 5, "rating"),
    ("r-02", "team-r2", 5, "rating"),
    ("r-03", "team-r3", 5, "rating"),
    ("r-04", "team-r4", 5, "rating"),
    (SELF_TEAM_RATER, "team-alpha", 5, "rating"),
    (BAD_RATER, "team-r5", 5, "rating"),
    ("d-01", "team-d1", 7, "diversity"),
    ("d-02", "team-d2", 7, "diversity"),
)

DEV_PER_CATEGORY = 8  # the first six are referents
EVAL_PER_CATEGORY = 10
SUBMISSION_PER_CATEGORY = 10
REFERENTS_PER_CATEGORY = 6
ANCHOR_COMBOS = (("high", "low"), ("high", "high"), ("low", "low"))
ANCHORS_PER_COMBO = 4

BASE_QUALITY = {"alpha": 8, "beta": 5}
BASE_FIT = {"alpha": 9, "beta": 6}
BASE_DIVERSITY = {"alpha": 7, "beta": 3}
ANCHOR_QUALITY = {"high": 8, "low": 2}
ANCHOR_FIT = {"high": 9, "low": 1}


def fixture_config(root: str | Path) -> PipelineConfig:
    """Protocol parameters scaled down to the fixture corpus size."""
    return PipelineConfig(
        work_dir=str(root),
        seed=FIXTURE_SEED,
        k_medoids=3,
        top_k=2,
        band=(3, 6),
        expected_eval_count=EVAL_PER_CATEGORY,
    )


def write_fixture_config(root: str | Path) -> Path:
    cfg = fixture_config(root)
    path = Path(root) / "fixture.toml"
    lines = [
        f'work_dir = "{cfg.work_dir}"',
        f"seed = {cfg.seed}",
        f"k_medoids = {cfg.k_medoids}",
        f"top_k = {cfg.top_k}",
        f"band = [{cfg.band[0]}, {cfg.band[1]}]",
        f"expected_eval_count = {cfg.expected_eval_count}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# -------------------------------------------------------------- synthesis

def _seeded(*parts) -> np.random.Generator:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    entropy = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def category_frequency(category: str) -> float:
    """Distinct fundamental per category, 220 Hz up to about 880 Hz."""
    return 220.0 * 2.0 ** (category_code(category) / 3.0)


def synth_tone(
    rng: np.random.Generator,
    rate: int,
    seconds: float,
    f0: float,
    harmonic_amps: tuple,
    noise: float,
    ramp: bool = False,
    distortion: float = 0.0,
) -> np.ndarray:
    """Harmonic tone with seeded phases, optional ramp envelope and clipping."""
    n = int(round(rate * seconds))
    t = np.arange(n, dtype=np.float64) / rate
    x = np.zeros(n)
    for k, amp in enumerate(harmonic_amps, start=1):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        x += amp * np.sin(2.0 * np.pi * k * f0 * t + phase)
    peak = np.max(np.abs(x))
    if peak > 0:
        x *= 0.7 / peak
    if distortion > 0.0:
        x = np.tanh(distortion * x) / np.tanh(distortion)
    if ramp:
        x *= np.linspace(0.5, 1.0, n)
    if noise > 0.0:
        x += rng.normal(0.0, noise, size=n)
    return np.clip(x, -0.98, 0.98)


def _clip_shape(i: int) -> tuple[int, float, bool]:
    """Deterministic (rate, seconds, stereo) variety to exercise conforming."""
    rate = (22050, 22050, 44100, 22050, 48000, 22050, 32000, 22050)[i % 8]
    seconds = 4.0
    if i % 4 == 1:
        seconds = 5.0
    if i % 8 == 6:
        seconds = 2.5
    stereo = i % 5 == 2
    return rate, seconds, stereo


def _write_clip(path: Path, samples: np.ndarray, rate: int, stereo: bool) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if stereo:
        samples = np.stack([samples, samples * 0.8], axis=1)
    write_wav_int16(path, encode_int16(samples), rate)


def corpus_clip_audio(category: str, split: str, i: int) -> tuple[np.ndarray, int, bool]:
    rng = _seeded("fixture", "corpus", category, split, i)
    rate, seconds, stereo = _clip_shape(i)
    f0 = category_frequency(category) * (1.0 + 0.004 * (i - 4))
    amps = (1.0, 0.55, 0.3)[: 2 + i % 2]
    x = synth_tone(rng, rate, seconds, f0, amps, noise=0.015, ramp=seconds > 4.0)
    return x, rate, stereo


def anchor_audio(category: str, quality_pole: str, fit_pole: str, i: int) -> np.ndarray:
    rng = _seeded("fixture", "anchor", category, quality_pole, fit_pole, i)
    if fit_pole == "high":
        f0 = category_frequency(category)
    else:
        other = CATEGORIES[(category_code(category) + 3) % len(CATEGORIES)]
        f0 = category_frequency(other)
    f0 *= 1.0 + 0.003 * i
    if quality_pole == "high":
        return synth_tone(rng, 22050, 4.0, f0, (1.0, 0.5), noise=0.005)
    return synth_tone(rng, 22050, 4.0, f0, (1.0, 0.5), noise=0.25, distortion=8.0)


def submission_clip_audio(system_id: str, category: str, i: int) -> tuple[np.ndarray, int, bool]:
    rng = _seeded("fixture", "submission", system_id, category, i)
    rate, seconds, stereo = _clip_shape(i + 3)
    f0 = category_frequency(category)
    if system_id == "alpha":
        # near the corpus distribution, with mild grouping for clustering
        detune = 1.0 + 0.006 * ((i % 5) - 2)
        amps = ((1.0, 0.5), (1.0, 0.55, 0.3), (1.0, 0.4, 0.2, 0.1))[i % 3]
        x = synth_tone(rng, rate, seconds, f0 * detune, amps, noise=0.02,
                       ramp=seconds > 4.0)
    else:
        # inharmonic partials plus heavy noise: far from the corpus statistics
        n = int(round(rate * seconds))
        t = np.arange(n, dtype=np.float64) / rate
        x = 0.4 * np.sin(2.0 * np.pi * f0 * 1.37 * t + rng.uniform(0, 2 * np.pi))
        x += 0.3 * np.sin(2.0 * np.pi * f0 * 2.11 * t + rng.uniform(0, 2 * np.pi))
        x += rng.normal(0.0, 0.35, size=n)
        x = np.clip(x, -0.98, 0.98)
    return x, rate, stereo


# ------------------------------------------------------------------ build

@dataclass
class FixturePaths:
    root: Path
    raw_manifest: Path
    raw_submissions: Path
    systems_csv: Path
    raters_csv: Path
    config_toml: Path


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def build_fixture(root: str | Path) -> FixturePaths:
    """Write the complete mock challenge under `root` (idempotent)."""
    root = Path(root)
    raw_dir = root / "raw"
    clips_dir = raw_dir / "clips"
    manifest_rows: list[list[str]] = []

    for category in CATEGORIES:
        for split, count in (("development", DEV_PER_CATEGORY),
                             ("evaluation", EVAL_PER_CATEGORY)):
            short = "dev" if split == "development" else "eval"
            for i in range(count):
                clip_id = f"{category}-{short}-{i:02d}"
                x, rate, stereo = corpus_clip_audio(category, split, i)
                _write_clip(clips_dir / f"{clip_id}.wav", x, rate, stereo)
                referent = split == "development" and i < REFERENTS_PER_CATEGORY
                manifest_rows.append(
                    [clip_id, f"clips/{clip_id}.wav", category,
                     f"src-{category}-{short}-{i:02d}", split,
                     "1" if referent else "0", "", ""]
                )
        for quality_pole, fit_pole in ANCHOR_COMBOS:
            for i in range(ANCHORS_PER_COMBO):
                clip_id = f"{category}-anchor-{quality_pole[0]}{fit_pole[0]}-{i}"
                x = anchor_audio(category, quality_pole, fit_pole, i)
                _write_clip(clips_dir / f"{clip_id}.wav", x, 22050, stereo=False)
                manifest_rows.append(
                    [clip_id, f"clips/{clip_id}.wav", category,
                     f"src-{category}-anchor-{quality_pole[0]}{fit_pole[0]}-{i}",
                     "anchor", "0", quality_pole, fit_pole]
                )

    raw_dir.mkdir(parents=True, exist_ok=True)
    _write_table(
        raw_dir / "manifest.csv",
        ["clip_id", "path", "category", "source_recording_id", "split",
         "referent", "anchor_quality", "anchor_fit"],
        manifest_rows,
    )

    submissions_dir = root / "raw_submissions"
    for system_id, track, team_id in SYSTEMS:
        for category in CATEGORIES:
            for i in range(SUBMISSION_PER_CATEGORY):
                x, rate, stereo = submission_clip_audio(system_id, category, i)
                _write_clip(
                    submissions_dir / system_id / category / f"clip{i:02d}.wav",
                    x, rate, stereo,
                )
        meta = {"system_id": system_id, "track": track, "team_id": team_id}
        with open(submissions_dir / system_id / "submission.json", "w",
                  encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    _write_table(
        root / "systems.csv",
        ["system_id", "track", "team_id"],
        [[s, t, m] for s, t, m in SYSTEMS],
    )
    _write_table(
        root / "raters.csv",
        ["rater_id", "team_id", "capacity", "role"],
        [[r, t, str(c), role] for r, t, c, role in RATER_ROWS],
    )
    config_toml = write_fixture_config(root)

    return FixturePaths(
        root=root,
        raw_manifest=raw_dir / "manifest.csv",
        raw_submissions=submissions_dir,
        systems_csv=root / "systems.csv",
        raters_csv=root / "raters.csv",
        config_toml=config_toml,
    )


# --------------------------------------------------------- scripted raters

def _jitter(*parts, span: int = 2) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little") % span


def response_for(rater_id: str, trial: Trial) -> dict:
    """Deterministic scripted payload for one sealed trial ({} for acks)."""
    if trial.kind in ("referent", "break"):
        return {}
    if trial.kind == "diversity":
        value = BASE_DIVERSITY[trial.system_id] + _jitter(rater_id, trial.clip_id, "d")
        return {"diversity": min(value, 10)}
    if trial.anchor:
        quality_pole, fit_pole = trial.anchor.split("_")
        if rater_id == BAD_RATER:
            quality_pole = "low" if quality_pole == "high" else "high"
            fit_pole = "low" if fit_pole == "high" else "high"
        return {
            "quality": ANCHOR_QUALITY[quality_pole],
            "fit": ANCHOR_FIT[fit_pole],
        }
    if rater_id == BAD_RATER:
        return {"quality": 10, "fit": 10}
    quality = BASE_QUALITY[trial.system_id] + _jitter(rater_id, trial.clip_id, "q")
    fit = BASE_FIT[trial.system_id] + _jitter(rater_id, trial.clip_id, "f")
    return {"quality": min(quality, 10), "fit": min(fit, 10)}
