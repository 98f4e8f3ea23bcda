"""Pipeline configuration, stage functions, and artifact conventions.

Each stage is a plain function over file paths so the CLI subcommands and
the `run` orchestrator share one implementation. A stage that cannot find
its input names the stage that produces it.
"""

from __future__ import annotations

import json
import os
import shutil
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .categories import CATEGORIES
from .corpus.manifest import (
    Manifest,
    ManifestEntry,
    load_manifest,
    manifest_pcm_hashes,
)
from .corpus.preprocess import preprocess_clip
from .corpus.submission import SubmissionSet, validate_submission
from .embed.builtin import BUILTIN_MODEL_ID, DIM, WINDOWS_PER_CLIP, builtin_embed
from .embed.external import import_external_embeddings
from .embed.store import EmbedderSpec, EmbeddingMatrix, read_embeddings, write_embeddings
from .metrics.fad import FadResult, FadTable, fad_table, top_k_by_average
from .provenance import config_hash, read_csv_rows, write_csv, write_json
from .ratings.aggregate import AggregateScore, CategoryScore, aggregate
from .ratings.exclusions import apply_exclusions
from .ratings.rank import FinalRanking, RankedSystem, final_rank
from .ratings.records import ingest_ratings
from .ratings.report import correlation_report, fig1_rows, fig2_rows
from .select.medoids import MedoidEntry, MedoidSet, medoids_for_systems
from .select.sequence import (
    DiversitySequence,
    assemble_diversity_sequence,
    obfuscation_tokens,
    write_sealed_map,
)
from .trials.assign import Rater, assign_categories
from .trials.plan import (
    AnchorSpec,
    Finalist,
    PlanBundle,
    assemble_plans,
    build_category_plan,
)
from .wavio import encode_int16, read_wav, write_wav_int16

STAGES = (
    "preprocess",
    "embed",
    "fad",
    "screen",
    "medoids",
    "diversity",
    "plan",
    "ingest",
    "exclude",
    "aggregate",
    "rank",
    "report",
)


class StageInputError(FileNotFoundError):
    """An input artifact is missing; the message names the producing stage."""


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    work_dir: str = "."
    seed: int = 0
    k_medoids: int = 20
    top_k: int = 4
    weights: tuple = (1.0, 1.0, 0.5)
    band: tuple = (10, 15)
    expected_eval_count: int = 100
    policy: str = "max-rms"
    gap_seconds: float = 0.5
    count_all_anchors: bool = False
    embed_backend: str = "builtin"
    import_dir: str = ""
    # location overrides; empty string means the workspace convention
    manifest: str = ""
    submissions: str = ""
    embeddings: str = ""
    plans: str = ""
    data: str = ""

    def validate(self) -> None:
        if self.k_medoids < 1 or self.top_k < 1:
            raise ConfigError("k and top-k must be positive")
        if len(self.weights) != 3 or any(w <= 0 for w in self.weights):
            raise ConfigError(f"weights must be three positive numbers: {self.weights}")
        if len(self.band) != 2 or self.band[0] > self.band[1] or self.band[0] < 1:
            raise ConfigError(f"bad target rating band: {self.band}")
        if self.policy not in ("max-rms", "first"):
            raise ConfigError(f"unknown pad/segment policy {self.policy!r}")
        if self.embed_backend not in ("builtin", "import"):
            raise ConfigError(f"unknown embed backend {self.embed_backend!r}")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    def as_dict(self) -> dict:
        return {
            "work_dir": self.work_dir,
            "seed": self.seed,
            "k_medoids": self.k_medoids,
            "top_k": self.top_k,
            "weights": list(self.weights),
            "band": list(self.band),
            "expected_eval_count": self.expected_eval_count,
            "policy": self.policy,
            "gap_seconds": self.gap_seconds,
            "count_all_anchors": self.count_all_anchors,
            "embed_backend": self.embed_backend,
            "import_dir": self.import_dir,
            "manifest": self.manifest,
            "submissions": self.submissions,
            "embeddings": self.embeddings,
            "plans": self.plans,
            "data": self.data,
        }

    # filesystem locations; they say where artifacts live, not what the
    # protocol computes, so the config digest must not move with them
    LOCATION_FIELDS = ("work_dir", "import_dir", "manifest", "submissions", "embeddings", "plans", "data")

    @property
    def hash(self) -> str:
        protocol = {k: v for k, v in self.as_dict().items() if k not in self.LOCATION_FIELDS}
        return config_hash(protocol)

    @staticmethod
    def from_toml(path: str) -> "PipelineConfig":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        known = {f.name for f in PipelineConfig.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "weights" in data:
            data["weights"] = tuple(data["weights"])
        if "band" in data:
            data["band"] = tuple(data["band"])
        return PipelineConfig(**data)

    def merged(self, **flags) -> "PipelineConfig":
        """Flags win over file values; None flags keep the file value."""
        updates = {k: v for k, v in flags.items() if v is not None}
        return replace(self, **updates)


class Workspace:
    """Conventional artifact layout under one working directory.

    A PipelineConfig may override the manifest, submissions, embeddings,
    plans, and data locations; every other artifact hangs off those.
    """

    def __init__(self, root: str, config: "PipelineConfig | None" = None):
        self.root = Path(root)
        self._overrides = {}
        if config is not None:
            for key in ("manifest", "submissions", "embeddings", "plans", "data"):
                value = getattr(config, key)
                if value:
                    self._overrides[key] = self._resolve(value)

    def _resolve(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.root / path

    # inputs
    @property
    def raw_manifest(self) -> Path:
        return self._overrides.get("manifest", self.root / "raw" / "manifest.csv")

    @property
    def raw_submissions(self) -> Path:
        return self._overrides.get("submissions", self.root / "raw_submissions")

    @property
    def systems_csv(self) -> Path:
        return self.root / "systems.csv"

    @property
    def raters_csv(self) -> Path:
        return self.root / "raters.csv"

    # artifacts
    @property
    def audio_dir(self) -> Path:
        return self.root / "audio"

    @property
    def manifest(self) -> Path:
        return self.audio_dir / "manifest.csv"

    @property
    def submissions_dir(self) -> Path:
        return self.root / "submissions"

    @property
    def embeddings_dir(self) -> Path:
        return self._overrides.get("embeddings", self.root / "embeddings")

    @property
    def system_embeddings_dir(self) -> Path:
        return self.embeddings_dir / "systems"

    def reference_femb(self, tag: str) -> Path:
        return self.embeddings_dir / f"{tag}.femb"

    def fad_csv(self, tag: str) -> Path:
        return self.root / f"fad_{tag}.csv"

    @property
    def finalists_csv(self) -> Path:
        return self.root / "finalists.csv"

    @property
    def medoids_csv(self) -> Path:
        return self.root / "medoids.csv"

    @property
    def diversity_dir(self) -> Path:
        return self.root / "diversity"

    @property
    def sealed_map(self) -> Path:
        return self.diversity_dir / "sealed_map.json"

    @property
    def plans_dir(self) -> Path:
        return self._overrides.get("plans", self.root / "plans")

    @property
    def sealed_plan(self) -> Path:
        return self.plans_dir / "sealed_plan.json"

    @property
    def public_plan(self) -> Path:
        return self.plans_dir / "public_plan.json"

    @property
    def serve_dir(self) -> Path:
        return self._overrides.get("data", self.root / "serve")

    @property
    def ratings_jsonl(self) -> Path:
        return self.serve_dir / "ratings.jsonl"

    @property
    def results_dir(self) -> Path:
        return self.root / "results"


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageInputError(
            f"missing {path}; run the {producer} stage (or supply it) first"
        )
    return path


# ---------------------------------------------------------------- systems

def load_systems_table(path: str | Path) -> dict[str, dict]:
    """system_id -> {track, team_id} from a systems metadata CSV."""
    header, rows = read_csv_rows(path)
    if header[:3] != ["system_id", "track", "team_id"]:
        raise ConfigError(
            f"{path}: expected header system_id,track,team_id, got {','.join(header)}"
        )
    out = {}
    for row in rows:
        out[row[0]] = {"track": row[1], "team_id": row[2]}
    return out


# ------------------------------------------------------------- preprocess

def stage_preprocess_manifest(
    manifest_path: str | Path, out_dir: str | Path, policy: str, cfg_hash: str
) -> Manifest:
    """Conform every manifest clip; write wavs plus a rewritten manifest."""
    manifest = load_manifest(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    new_entries = []
    for entry in manifest.entries:
        clip = preprocess_clip(
            read_wav(entry.path),
            policy,
            clip_id=entry.clip_id,
            category=entry.category,
            source_recording_id=entry.source_recording_id,
            split=entry.split,
        )
        name = f"{entry.clip_id}.wav"
        write_wav_int16(out_dir / name, clip.samples, 22050)
        new_entries.append(replace(entry, path=out_dir / name))

    rows = [
        [
            e.clip_id,
            e.path.name,
            e.category,
            e.source_recording_id,
            e.split,
            "1" if e.referent else "0",
            e.anchor_quality,
            e.anchor_fit,
        ]
        for e in new_entries
    ]
    write_csv(
        out_dir / "manifest.csv",
        ["clip_id", "path", "category", "source_recording_id", "split",
         "referent", "anchor_quality", "anchor_fit"],
        rows,
        cfg_hash,
    )
    return Manifest(dataset_name=manifest.dataset_name, entries=new_entries)


def stage_preprocess_tree(
    in_dir: str | Path, out_dir: str | Path, policy: str
) -> int:
    """Conform every .wav under in_dir, mirroring the directory layout."""
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    if not in_dir.is_dir():
        raise StageInputError(f"input directory not found: {in_dir}")
    count = 0
    for path in sorted(in_dir.rglob("*.wav")):
        clip = preprocess_clip(read_wav(path), policy, clip_id=path.stem)
        target = out_dir / path.relative_to(in_dir)
        target.parent.mkdir(parents=True, exist_ok=True)
        write_wav_int16(target, clip.samples, 22050)
        count += 1
    return count


# ------------------------------------------------------------------ embed

def _embed_clips(entries: list[tuple[str, Path, str]], label: str) -> EmbeddingMatrix:
    """entries: (clip_id, wav path, category) triples, builtin backend."""
    clip_ids, categories, blocks = [], [], []
    for clip_id, path, category in entries:
        decoded = read_wav(path)
        clip = preprocess_clip(decoded, "first", clip_id=clip_id, category=category)
        blocks.append(builtin_embed(clip))
        clip_ids.append(clip_id)
        categories.append(category)
    spec = EmbedderSpec(
        model_id=BUILTIN_MODEL_ID, dim=DIM, frames_per_clip=WINDOWS_PER_CLIP
    )
    return EmbeddingMatrix(
        spec=spec,
        clip_ids=clip_ids,
        frames_per_clip=[WINDOWS_PER_CLIP] * len(clip_ids),
        vectors=np.concatenate(blocks).astype(np.float32),
        label=label,
        categories=categories,
    )


def embed_manifest_split(manifest: Manifest, split: str, label: str) -> EmbeddingMatrix:
    entries = [
        (e.clip_id, e.path, e.category)
        for e in manifest.by_split(split)
    ]
    if not entries:
        raise ConfigError(f"manifest has no {split!r} clips")
    return _embed_clips(entries, label)


def embed_submission(sub: SubmissionSet) -> EmbeddingMatrix:
    entries = []
    for category in CATEGORIES:
        for path in sub.category_files(category):
            entries.append((f"{sub.system_id}/{category}/{path.stem}", path, category))
    if not entries:
        raise ConfigError(f"submission {sub.system_id!r} has no clips")
    return _embed_clips(entries, label=sub.system_id)


def embed_import(
    manifest: Manifest,
    split: str,
    label: str,
    import_dir: str,
    spec: EmbedderSpec | None = None,
) -> EmbeddingMatrix:
    """Assemble externally computed per-clip embeddings for one split.

    When no spec is given it is taken from the first clip's file; every
    other file must then agree with it.
    """
    entries = manifest.by_split(split)
    if not entries:
        raise ConfigError(f"manifest has no {split!r} clips")
    if spec is None:
        first = Path(import_dir) / f"{entries[0].clip_id}.femb"
        if not first.is_file():
            raise StageInputError(
                f"missing embedding file {first}; supply the import directory"
            )
        spec = read_embeddings(first).spec
    clip_ids = [e.clip_id for e in entries]
    categories = [e.category for e in entries]
    return import_external_embeddings(
        import_dir, spec, clip_ids, categories=categories, label=label
    )


# -------------------------------------------------------------------- fad

def stage_fad(
    systems_dir: str | Path,
    reference_path: str | Path,
    tag: str,
    out_csv: str | Path,
    cfg_hash: str,
    tracks: dict[str, str] | None = None,
) -> FadTable:
    systems_dir = Path(systems_dir)
    _require(Path(reference_path), "embed")
    if not systems_dir.is_dir():
        raise StageInputError(f"missing {systems_dir}; run the embed stage first")
    fembs = sorted(systems_dir.glob("*.femb"))
    if not fembs:
        raise StageInputError(f"no .femb files in {systems_dir}; run the embed stage first")
    systems = {p.stem: read_embeddings(p) for p in fembs}
    reference = read_embeddings(reference_path)
    table = fad_table(systems, reference, tag)

    tracks = tracks or {}
    rows = []
    for result in table.results:
        track = tracks.get(result.system_id, "A")
        for category in sorted(result.per_category):
            rows.append(
                [result.system_id, track, category,
                 f"{result.per_category[category]:.12g}", f"{result.average:.12g}"]
            )
    write_csv(out_csv, ["system_id", "track", "category", "fad", "average"], rows, cfg_hash)
    return table


def load_fad_csv(path: str | Path) -> tuple[FadTable, dict[str, str]]:
    """Rebuild a FadTable (tag unknown -> 'file') and track map from fad.csv."""
    header, rows = read_csv_rows(path)
    if header != ["system_id", "track", "category", "fad", "average"]:
        raise ConfigError(f"{path}: unexpected fad.csv header {','.join(header)}")
    per_system: dict[str, dict] = {}
    tracks: dict[str, str] = {}
    for system_id, track, category, fad, average in rows:
        entry = per_system.setdefault(system_id, {"per_category": {}, "average": None})
        entry["per_category"][category] = float(fad)
        entry["average"] = float(average)
        tracks[system_id] = track
    table = FadTable(reference_tag="file", categories=sorted(
        {c for e in per_system.values() for c in e["per_category"]}
    ))
    for system_id in sorted(per_system):
        table.results.append(
            FadResult(
                system_id=system_id,
                reference_tag="file",
                per_category=per_system[system_id]["per_category"],
                average=per_system[system_id]["average"],
            )
        )
    return table, tracks


def stage_screen(
    fad_csv: str | Path, k: int, out_csv: str | Path, cfg_hash: str
) -> list[tuple[str, str, float]]:
    """Top-k systems per track by average FAD -> finalists.csv rows."""
    _require(Path(fad_csv), "fad")
    table, tracks = load_fad_csv(fad_csv)
    by_track: dict[str, list[FadResult]] = {}
    for result in table.results:
        by_track.setdefault(tracks[result.system_id], []).append(result)
    rows = []
    for track in sorted(by_track):
        for result in top_k_by_average(by_track[track], k):
            rows.append((result.system_id, track, result.average))
    write_csv(
        out_csv,
        ["system_id", "track", "average"],
        [[s, t, f"{a:.12g}"] for s, t, a in rows],
        cfg_hash,
    )
    return rows


def load_finalists_csv(path: str | Path) -> list[Finalist]:
    header, rows = read_csv_rows(path)
    if header[:2] != ["system_id", "track"]:
        raise ConfigError(f"{path}: expected header system_id,track,...")
    return [Finalist(system_id=r[0], track=r[1]) for r in rows]


# ---------------------------------------------------------------- medoids

def stage_medoids(
    embeddings_path: str | Path,
    k: int,
    seed: int,
    out_csv: str | Path,
    cfg_hash: str,
    only_systems: list[str] | None = None,
) -> MedoidSet:
    """Medoid selection over one .femb file or a directory of them."""
    embeddings_path = Path(embeddings_path)
    if embeddings_path.is_file():
        fembs = [embeddings_path]
    elif embeddings_path.is_dir():
        fembs = sorted(embeddings_path.glob("*.femb"))
    else:
        raise StageInputError(f"missing {embeddings_path}; run the embed stage first")
    if only_systems is not None:
        wanted = set(only_systems)
        fembs = [p for p in fembs if p.stem in wanted]
        missing = wanted - {p.stem for p in fembs}
        if missing:
            raise StageInputError(
                f"no embeddings for finalists {sorted(missing)}; run the embed stage first"
            )
    if not fembs:
        raise StageInputError(
            f"no .femb files in {embeddings_path}; run the embed stage first"
        )
    embeddings = {p.stem: read_embeddings(p) for p in fembs}
    medoid_set = medoids_for_systems(embeddings, k, seed)
    write_csv(
        out_csv,
        ["system_id", "category", "cluster", "clip_id", "distance"],
        [
            [s, c, str(cl), cid, f"{d:.12g}"]
            for s, c, cl, cid, d in medoid_set.as_rows()
        ],
        cfg_hash,
        seed=seed,
    )
    return medoid_set


def load_medoids_csv(path: str | Path) -> MedoidSet:
    header, rows = read_csv_rows(path)
    if header != ["system_id", "category", "cluster", "clip_id", "distance"]:
        raise ConfigError(f"{path}: unexpected medoids.csv header {','.join(header)}")
    out = MedoidSet()
    for system_id, category, cluster, clip_id, distance in rows:
        out.entries.setdefault((system_id, category), []).append(
            MedoidEntry(cluster=int(cluster), clip_id=clip_id, distance=float(distance))
        )
    for entries in out.entries.values():
        entries.sort(key=lambda e: e.cluster)
    return out


# -------------------------------------------------------------- diversity

def _submission_clip_path(audio_dir: Path, clip_id: str) -> Path:
    """Medoid clip ids are `<system>/<category>/<stem>` under the audio dir."""
    return audio_dir / f"{clip_id}.wav"


def stage_diversity(
    medoids_csv: str | Path,
    audio_dir: str | Path,
    out_dir: str | Path,
    map_path: str | Path,
    seed: int,
    gap_seconds: float,
) -> list[DiversitySequence]:
    _require(Path(medoids_csv), "medoids")
    audio_dir = Path(audio_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    medoid_set = load_medoids_csv(medoids_csv)

    keys = sorted(medoid_set.entries)
    tokens = obfuscation_tokens(keys, seed)
    sequences = []
    for key in keys:
        system_id, category = key
        entries = medoid_set.entries[key]
        clips = {}
        for entry in entries:
            path = _submission_clip_path(audio_dir, entry.clip_id)
            if not path.exists():
                raise StageInputError(
                    f"missing medoid audio {path}; run the preprocess stage first"
                )
            decoded = read_wav(path)
            clips[entry.clip_id] = encode_int16(decoded.samples[:, 0])
        seq = assemble_diversity_sequence(
            entries, clips, system_id, category, tokens[key], gap_seconds
        )
        write_wav_int16(out_dir / seq.file_name, seq.samples, 22050)
        sequences.append(seq)
    write_sealed_map(str(map_path), sequences)
    return sequences


# ------------------------------------------------------------------- plan

def load_raters_csv(path: str | Path) -> list[Rater]:
    header, rows = read_csv_rows(path)
    if header != ["rater_id", "team_id", "capacity", "role"]:
        raise ConfigError(
            f"{path}: expected header rater_id,team_id,capacity,role, got {','.join(header)}"
        )
    return [
        Rater(rater_id=r[0], team_id=r[1], capacity=int(r[2]), role=r[3]) for r in rows
    ]


def anchors_from_manifest(manifest: Manifest, category: str) -> list[AnchorSpec]:
    return [
        AnchorSpec(
            clip_id=e.clip_id,
            quality_pole=e.anchor_quality,
            fit_pole=e.anchor_fit,
            category=category,
        )
        for e in manifest.anchors(category)
    ]


def plan_tables_from_manifest(
    manifest: Manifest,
) -> tuple[dict[str, list[tuple[str, str]]], dict[str, list[tuple[AnchorSpec, str]]]]:
    """(referents, anchors) tables keyed by category, values carry clip paths."""
    referents: dict[str, list[tuple[str, str]]] = {}
    anchors: dict[str, list[tuple[AnchorSpec, str]]] = {}
    for category in sorted({e.category for e in manifest.entries}):
        refs = [(e.clip_id, str(e.path)) for e in manifest.referents(category)]
        if refs:
            referents[category] = refs
        specs = [
            (spec, str(entry.path))
            for spec, entry in zip(
                anchors_from_manifest(manifest, category), manifest.anchors(category)
            )
        ]
        if specs:
            anchors[category] = specs
    return referents, anchors


def load_referents_csv(path: str | Path) -> dict[str, list[tuple[str, str]]]:
    """clip_id,category,path rows -> {category: [(clip_id, abs path)]}."""
    header, rows = read_csv_rows(path)
    if header != ["clip_id", "category", "path"]:
        raise ConfigError(
            f"{path}: expected header clip_id,category,path, got {','.join(header)}"
        )
    base = Path(path).resolve().parent
    out: dict[str, list[tuple[str, str]]] = {}
    for clip_id, category, rel in rows:
        out.setdefault(category, []).append((clip_id, str(base / rel)))
    return out


def load_anchors_csv(path: str | Path) -> dict[str, list[tuple[AnchorSpec, str]]]:
    """clip_id,category,quality_pole,fit_pole,path rows, paths CSV-relative."""
    header, rows = read_csv_rows(path)
    expected = ["clip_id", "category", "quality_pole", "fit_pole", "path"]
    if header != expected:
        raise ConfigError(
            f"{path}: expected header {','.join(expected)}, got {','.join(header)}"
        )
    base = Path(path).resolve().parent
    out: dict[str, list[tuple[AnchorSpec, str]]] = {}
    for clip_id, category, quality_pole, fit_pole, rel in rows:
        spec = AnchorSpec(
            clip_id=clip_id,
            quality_pole=quality_pole,
            fit_pole=fit_pole,
            category=category,
        )
        out.setdefault(category, []).append((spec, str(base / rel)))
    return out


def diversity_sequences_from_map(map_path: str | Path) -> dict[str, list[DiversitySequence]]:
    with open(map_path, "r", encoding="utf-8") as fh:
        mapping = json.load(fh)
    out: dict[str, list[DiversitySequence]] = {}
    for token, info in sorted(mapping.items()):
        seq = DiversitySequence(
            system_id=info["system_id"], category=info["category"], token=token
        )
        out.setdefault(seq.category, []).append(seq)
    return out


def _relative_clip_path(path: str, root: Path | None) -> str:
    """Portable form of a clip path: relative to root when it lies under it."""
    p = Path(path)
    if root is None or not p.is_absolute():
        return Path(path).as_posix()
    try:
        return p.resolve().relative_to(Path(root).resolve()).as_posix()
    except ValueError:
        return path


def stage_plan(
    referent_table: dict[str, list[tuple[str, str]]],
    anchor_table: dict[str, list[tuple[AnchorSpec, str]]],
    finalists: list[Finalist],
    medoid_set: MedoidSet,
    raters: list[Rater],
    seed: int,
    out_dir: str | Path,
    cfg_hash: str,
    band: tuple = (10, 15),
    diversity_map: str | Path | None = None,
    diversity_dir: str | Path | None = None,
    submissions_dir: str | Path = "submissions",
    path_root: str | Path | None = None,
) -> PlanBundle:
    """Assignment + per-category templates -> sealed and public plan files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path_root = Path(path_root) if path_root is not None else None

    categories = sorted({c for (_, c) in medoid_set.entries})
    templates = {}
    for category in categories:
        referents = [clip_id for clip_id, _ in referent_table.get(category, [])]
        anchors = [spec for spec, _ in anchor_table.get(category, [])]
        medoids = {
            f.system_id: medoid_set.clip_ids(f.system_id, category) for f in finalists
        }
        templates[category] = build_category_plan(
            category, finalists, medoids, anchors, referents, seed
        )

    rating_raters = [r for r in raters if r.role == "rating"]
    diversity_raters = [r.rater_id for r in raters if r.role == "diversity"]
    assignment = assign_categories(rating_raters, band=band, seed=seed,
                                   categories=tuple(categories))

    sequences = {}
    if diversity_map and Path(diversity_map).exists():
        sequences = diversity_sequences_from_map(diversity_map)

    clip_paths: dict[str, str] = {}
    for category in categories:
        for clip_id, path in referent_table.get(category, []):
            clip_paths[clip_id] = _relative_clip_path(path, path_root)
        for spec, path in anchor_table.get(category, []):
            clip_paths[spec.clip_id] = _relative_clip_path(path, path_root)
    for (system_id, category), entries in medoid_set.entries.items():
        for entry in entries:
            clip_paths[entry.clip_id] = _relative_clip_path(
                str(_submission_clip_path(Path(submissions_dir), entry.clip_id)),
                path_root,
            )
    for cat_sequences in sequences.values():
        for seq in cat_sequences:
            if diversity_dir is not None:
                clip_paths[seq.file_name] = _relative_clip_path(
                    str(Path(diversity_dir) / seq.file_name), path_root
                )

    bundle = assemble_plans(
        templates=templates,
        assignments={
            r: cats for r, cats in assignment.assignments.items() if cats
        },
        diversity_raters=sorted(diversity_raters),
        diversity_sequences=sequences,
        clip_paths=clip_paths,
        seed=seed,
    )

    write_json(str(out_dir / "sealed_plan.json"), bundle.sealed_dict(), cfg_hash, seed)
    os.chmod(out_dir / "sealed_plan.json", 0o600)
    write_json(str(out_dir / "public_plan.json"), bundle.public_dict(), cfg_hash, seed)
    write_json(
        str(out_dir / "assignment.json"),
        {
            "assignments": assignment.assignments,
            "coverage": assignment.coverage,
            "band": list(assignment.band),
            "shortfall": assignment.shortfall,
            "overshoot": assignment.overshoot,
        },
        cfg_hash,
        seed,
    )
    return bundle


# ---------------------------------------------------------------- results

def records_to_jsonl(records, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.as_dict(), sort_keys=True) + "\n")


def aggregate_to_dict(agg: AggregateScore) -> dict:
    return {
        "system_id": agg.system_id,
        "track": agg.track,
        "quality": agg.quality,
        "fit": agg.fit,
        "diversity": agg.diversity,
        "missing_categories": agg.missing_categories,
        "per_category": {
            c: {
                "quality": cs.quality,
                "fit": cs.fit,
                "diversity": cs.diversity,
                "rating_count": cs.rating_count,
                "diversity_count": cs.diversity_count,
            }
            for c, cs in sorted(agg.per_category.items())
        },
    }


def aggregate_from_dict(d: dict) -> AggregateScore:
    agg = AggregateScore(system_id=d["system_id"], track=d["track"])
    agg.missing_categories = list(d.get("missing_categories", []))
    for category, cs in d.get("per_category", {}).items():
        agg.per_category[category] = CategoryScore(
            quality=cs.get("quality"),
            fit=cs.get("fit"),
            diversity=cs.get("diversity"),
            rating_count=cs.get("rating_count", 0),
            diversity_count=cs.get("diversity_count", 0),
        )
    return agg


def ranking_to_dict(ranking: FinalRanking) -> dict:
    return {
        "weights": list(ranking.weights),
        "tracks": {
            track: [
                {
                    "system_id": r.system_id,
                    "track": r.track,
                    "rank": r.rank,
                    "combined": r.combined,
                    "quality": r.quality,
                    "fit": r.fit,
                    "diversity": r.diversity,
                    "fad_eval": r.fad_eval,
                    "note": r.note,
                }
                for r in ranked
            ]
            for track, ranked in ranking.tracks.items()
        },
    }


def ranking_from_dict(d: dict) -> FinalRanking:
    ranking = FinalRanking(weights=tuple(d["weights"]))
    for track, rows in d["tracks"].items():
        ranking.tracks[track] = [
            RankedSystem(
                system_id=r["system_id"],
                track=r["track"],
                rank=r["rank"],
                combined=r["combined"],
                quality=r["quality"],
                fit=r["fit"],
                diversity=r["diversity"],
                fad_eval=r.get("fad_eval"),
                note=r.get("note", ""),
            )
            for r in rows
        ]
    return ranking


def stage_exclude(
    ratings_path: str | Path,
    plan: PlanBundle,
    finalist_teams: dict[str, str],
    out_dir: str | Path,
    cfg_hash: str,
    count_all_anchors: bool = False,
):
    _require(Path(ratings_path), "serve/ingest")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = ingest_ratings(str(ratings_path), plan)
    retained, report = apply_exclusions(
        result.records, plan, finalist_teams, count_all_anchors=count_all_anchors
    )
    records_to_jsonl(retained, out_dir / "retained.jsonl")
    write_json(
        str(out_dir / "exclusions.json"),
        {
            "excluded": [
                {
                    "session_id": e.session_id,
                    "rater_id": e.rater_id,
                    "mis_rated": e.mis_rated,
                    "counted": e.counted,
                    "total_anchors": e.total_anchors,
                    "anchors": [
                        {
                            "trial_id": j.trial_id,
                            "anchor": j.anchor,
                            "quality": j.quality,
                            "fit": j.fit,
                            "mis_rated": j.mis_rated,
                            "counted": j.counted,
                        }
                        for j in e.judgments
                    ],
                }
                for e in report.excluded
            ],
            "anchor_records_removed": report.anchor_records_removed,
            "self_ratings_removed": report.self_ratings_removed,
            "retained": report.retained,
            "duplicates_ignored": len(result.duplicates),
        },
        cfg_hash,
    )
    return retained, report


def stage_aggregate(
    retained_path: str | Path,
    plan: PlanBundle,
    tracks: dict[str, str],
    out_path: str | Path,
    cfg_hash: str,
) -> list[AggregateScore]:
    _require(Path(retained_path), "exclude")
    result = ingest_ratings(str(retained_path), plan)
    aggregates = aggregate(result.records, plan, tracks)
    write_json(
        str(out_path),
        {"systems": [aggregate_to_dict(a) for a in aggregates]},
        cfg_hash,
    )
    return aggregates


def stage_rank(
    aggregates_path: str | Path,
    weights: tuple,
    fad_eval_csv: str | Path | None,
    out_json: str | Path,
    out_csv: str | Path,
    cfg_hash: str,
) -> FinalRanking:
    _require(Path(aggregates_path), "aggregate")
    with open(aggregates_path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    aggregates = [aggregate_from_dict(d) for d in data["systems"]]
    fad_avg = None
    if fad_eval_csv and Path(fad_eval_csv).exists():
        table, _ = load_fad_csv(fad_eval_csv)
        fad_avg = {r.system_id: r.average for r in table.results}
    ranking = final_rank(aggregates, weights=weights, fad_eval=fad_avg)
    write_json(str(out_json), ranking_to_dict(ranking), cfg_hash)
    rows = []
    for entry in ranking.all_systems():
        rows.append(
            [
                entry.track,
                str(entry.rank),
                entry.system_id,
                "" if entry.combined is None else f"{entry.combined:.12g}",
                "" if entry.quality is None else f"{entry.quality:.12g}",
                "" if entry.fit is None else f"{entry.fit:.12g}",
                "" if entry.diversity is None else f"{entry.diversity:.12g}",
                entry.note,
            ]
        )
    write_csv(
        out_csv,
        ["track", "rank", "system_id", "combined", "quality", "fit", "diversity", "note"],
        rows,
        cfg_hash,
    )
    return ranking


def stage_report(
    aggregates_path: str | Path,
    retained_path: str | Path,
    plan: PlanBundle,
    ranking_path: str | Path,
    out_dir: str | Path,
    cfg_hash: str,
    fad_dev_csv: str | Path | None = None,
    fad_eval_csv: str | Path | None = None,
) -> dict:
    _require(Path(aggregates_path), "aggregate")
    _require(Path(ranking_path), "rank")
    _require(Path(retained_path), "exclude")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(aggregates_path, "r", encoding="utf-8") as fh:
        aggregates = [aggregate_from_dict(d) for d in json.load(fh)["systems"]]
    with open(ranking_path, "r", encoding="utf-8") as fh:
        ranking = ranking_from_dict(json.load(fh))
    records = ingest_ratings(str(retained_path), plan).records

    fad_dev_table = fad_eval_table = None
    fad_dev_avg = fad_eval_avg = None
    if fad_dev_csv and Path(fad_dev_csv).exists():
        fad_dev_table, _ = load_fad_csv(fad_dev_csv)
        fad_dev_avg = {r.system_id: r.average for r in fad_dev_table.results}
    if fad_eval_csv and Path(fad_eval_csv).exists():
        fad_eval_table, _ = load_fad_csv(fad_eval_csv)
        fad_eval_avg = {r.system_id: r.average for r in fad_eval_table.results}

    report = correlation_report(
        aggregates, records, plan, ranking, fad_dev=fad_dev_avg, fad_eval=fad_eval_avg
    )
    write_json(str(out_dir / "report.json"), report, cfg_hash)

    if fad_dev_table is not None and fad_eval_table is not None:
        rows = fig1_rows(fad_dev_table, fad_eval_table)
        write_csv(
            out_dir / "fig1.csv",
            ["system_id", "fad_dev_avg", "fad_dev_std", "fad_eval_avg", "fad_eval_std"],
            [
                [
                    r["system_id"],
                    f"{r['fad_dev_avg']:.12g}",
                    f"{r['fad_dev_std']:.12g}",
                    f"{r['fad_eval_avg']:.12g}",
                    f"{r['fad_eval_std']:.12g}",
                ]
                for r in rows
            ],
            cfg_hash,
        )
    rows = fig2_rows(ranking, fad_dev=fad_dev_avg, fad_eval=fad_eval_avg)
    write_csv(
        out_dir / "fig2.csv",
        ["system_id", "track", "final_rank", "combined", "fad_eval_avg", "fad_dev_avg"],
        [
            [
                r["system_id"],
                r["track"],
                str(r["final_rank"]),
                "" if r["combined"] is None else f"{r['combined']:.12g}",
                "" if r["fad_eval_avg"] is None else f"{r['fad_eval_avg']:.12g}",
                "" if r["fad_dev_avg"] is None else f"{r['fad_dev_avg']:.12g}",
            ]
            for r in rows
        ],
        cfg_hash,
    )
    return report


# -------------------------------------------------------------------- run

class ValidationFailure(ValueError):
    """Input data violated a protocol check (distinct from missing inputs)."""


def _input(path: Path, what: str) -> Path:
    if not path.exists():
        raise StageInputError(f"missing {path}; supply the {what}")
    return path


def run_pipeline(config: PipelineConfig, stages=None, echo=None) -> dict:
    """Run the requested stages in canonical order over the workspace layout.

    Returns a summary dict mapping each executed stage to the artifacts it
    wrote. Stages validate their own inputs and raise StageInputError naming
    the producing stage when an upstream artifact is absent.
    """
    config.validate()
    requested = list(STAGES) if stages is None else list(stages)
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise ConfigError(f"unknown stages {unknown}; valid: {', '.join(STAGES)}")
    ordered = [s for s in STAGES if s in requested]

    ws = Workspace(config.work_dir, config)
    cfg_hash = config.hash
    say = echo or (lambda message: None)
    summary: dict[str, dict] = {}

    for stage in ordered:
        say(f"[{stage}]")
        if stage == "preprocess":
            _input(ws.raw_manifest, "raw corpus manifest (raw/manifest.csv)")
            manifest = stage_preprocess_manifest(
                ws.raw_manifest, ws.audio_dir, config.policy, cfg_hash
            )
            written = {"manifest": str(ws.manifest), "clips": len(manifest.entries)}
            if ws.raw_submissions.is_dir():
                reports = []
                dev_hashes = manifest_pcm_hashes(manifest, "development")
                for src in sorted(p for p in ws.raw_submissions.iterdir() if p.is_dir()):
                    dst = ws.submissions_dir / src.name
                    count = stage_preprocess_tree(src, dst, config.policy)
                    meta = src / "submission.json"
                    if meta.exists():
                        dst.mkdir(parents=True, exist_ok=True)
                        shutil.copyfile(meta, dst / "submission.json")
                    sub = SubmissionSet.from_dir(dst)
                    report = validate_submission(
                        sub, config.expected_eval_count, dev_hashes
                    )
                    reports.append(report)
                    say(f"  {src.name}: {count} clips, ok={report.ok}")
                bad = [r for r in reports if not r.ok]
                if bad:
                    details = "; ".join(
                        f"{r.system_id}: "
                        + " | ".join(
                            r.count_violations + r.format_violations + r.duplicates
                        )
                        for r in bad
                    )
                    raise ValidationFailure(f"submission validation failed: {details}")
                written["submissions"] = len(reports)
            summary[stage] = written

        elif stage == "embed":
            _require(ws.manifest, "preprocess")
            manifest = load_manifest(ws.manifest)
            ws.embeddings_dir.mkdir(parents=True, exist_ok=True)
            ws.system_embeddings_dir.mkdir(parents=True, exist_ok=True)
            if config.embed_backend != "builtin":
                needed = [ws.reference_femb("dev"), ws.reference_femb("eval")]
                missing = [str(p) for p in needed if not p.exists()]
                if not any(ws.system_embeddings_dir.glob("*.femb")):
                    missing.append(str(ws.system_embeddings_dir / "<system>.femb"))
                if missing:
                    raise StageInputError(
                        "import backend expects externally produced embeddings at: "
                        + ", ".join(missing)
                        + "; assemble them with the embed command"
                    )
                summary[stage] = {"backend": "import"}
                continue
            dev = embed_manifest_split(manifest, "development", label="development")
            write_embeddings(dev, ws.reference_femb("dev"))
            ev = embed_manifest_split(manifest, "evaluation", label="evaluation")
            write_embeddings(ev, ws.reference_femb("eval"))
            systems = 0
            for sub_dir in sorted(p for p in ws.submissions_dir.iterdir() if p.is_dir()):
                sub = SubmissionSet.from_dir(sub_dir)
                matrix = embed_submission(sub)
                write_embeddings(
                    matrix, ws.system_embeddings_dir / f"{sub.system_id}.femb"
                )
                systems += 1
            if not systems:
                raise StageInputError(
                    f"no submission directories under {ws.submissions_dir}; "
                    "run the preprocess stage first"
                )
            summary[stage] = {
                "dev": str(ws.reference_femb("dev")),
                "eval": str(ws.reference_femb("eval")),
                "systems": systems,
            }

        elif stage == "fad":
            tracks = None
            if ws.systems_csv.exists():
                meta = load_systems_table(ws.systems_csv)
                tracks = {s: m["track"] for s, m in meta.items()}
            for tag in ("dev", "eval"):
                stage_fad(
                    ws.system_embeddings_dir,
                    ws.reference_femb(tag),
                    tag,
                    ws.fad_csv(tag),
                    cfg_hash,
                    tracks,
                )
            summary[stage] = {
                "dev": str(ws.fad_csv("dev")),
                "eval": str(ws.fad_csv("eval")),
            }

        elif stage == "screen":
            rows = stage_screen(ws.fad_csv("dev"), config.top_k, ws.finalists_csv, cfg_hash)
            summary[stage] = {"finalists": [r[0] for r in rows]}

        elif stage == "medoids":
            _require(ws.finalists_csv, "screen")
            finalists = load_finalists_csv(ws.finalists_csv)
            stage_medoids(
                ws.system_embeddings_dir,
                config.k_medoids,
                config.seed,
                ws.medoids_csv,
                cfg_hash,
                only_systems=[f.system_id for f in finalists],
            )
            summary[stage] = {"medoids": str(ws.medoids_csv)}

        elif stage == "diversity":
            sequences = stage_diversity(
                ws.medoids_csv,
                ws.submissions_dir,
                ws.diversity_dir,
                ws.sealed_map,
                config.seed,
                config.gap_seconds,
            )
            summary[stage] = {
                "files": len(sequences),
                "map": str(ws.sealed_map),
            }

        elif stage == "plan":
            _require(ws.manifest, "preprocess")
            _require(ws.finalists_csv, "screen")
            _require(ws.medoids_csv, "medoids")
            _input(ws.raters_csv, "rater roster (raters.csv)")
            manifest = load_manifest(ws.manifest)
            referent_table, anchor_table = plan_tables_from_manifest(manifest)
            bundle = stage_plan(
                referent_table,
                anchor_table,
                load_finalists_csv(ws.finalists_csv),
                load_medoids_csv(ws.medoids_csv),
                load_raters_csv(ws.raters_csv),
                config.seed,
                ws.plans_dir,
                cfg_hash,
                band=config.band,
                diversity_map=ws.sealed_map,
                diversity_dir=ws.diversity_dir,
                submissions_dir=ws.submissions_dir,
                path_root=ws.root,
            )
            summary[stage] = {
                "sessions": len(bundle.sessions),
                "sealed": str(ws.sealed_plan),
                "public": str(ws.public_plan),
            }

        elif stage == "ingest":
            _require(ws.sealed_plan, "plan")
            _require(ws.ratings_jsonl, "serve")
            plan = PlanBundle.load_sealed(ws.sealed_plan)
            result = ingest_ratings(str(ws.ratings_jsonl), plan)
            ws.results_dir.mkdir(parents=True, exist_ok=True)
            write_json(
                str(ws.results_dir / "ingest.json"),
                {
                    "records": len(result.records),
                    "ack_lines": result.ack_lines,
                    "duplicates": len(result.duplicates),
                },
                cfg_hash,
            )
            summary[stage] = {
                "records": len(result.records),
                "duplicates": len(result.duplicates),
            }

        elif stage == "exclude":
            _require(ws.sealed_plan, "plan")
            _input(ws.systems_csv, "systems metadata table (systems.csv)")
            plan = PlanBundle.load_sealed(ws.sealed_plan)
            meta = load_systems_table(ws.systems_csv)
            teams = {s: m["team_id"] for s, m in meta.items()}
            retained, report = stage_exclude(
                ws.ratings_jsonl,
                plan,
                teams,
                ws.results_dir,
                cfg_hash,
                config.count_all_anchors,
            )
            summary[stage] = {
                "excluded_sessions": len(report.excluded),
                "retained": report.retained,
            }

        elif stage == "aggregate":
            _require(ws.sealed_plan, "plan")
            _require(ws.finalists_csv, "screen")
            plan = PlanBundle.load_sealed(ws.sealed_plan)
            finalists = load_finalists_csv(ws.finalists_csv)
            tracks = {f.system_id: f.track for f in finalists}
            aggregates = stage_aggregate(
                ws.results_dir / "retained.jsonl",
                plan,
                tracks,
                ws.results_dir / "aggregates.json",
                cfg_hash,
            )
            summary[stage] = {"systems": len(aggregates)}

        elif stage == "rank":
            ranking = stage_rank(
                ws.results_dir / "aggregates.json",
                tuple(config.weights),
                ws.fad_csv("eval"),
                ws.results_dir / "ranking.json",
                ws.results_dir / "ranking.csv",
                cfg_hash,
            )
            summary[stage] = {
                "tracks": {t: len(r) for t, r in ranking.tracks.items()}
            }

        elif stage == "report":
            _require(ws.sealed_plan, "plan")
            plan = PlanBundle.load_sealed(ws.sealed_plan)
            stage_report(
                ws.results_dir / "aggregates.json",
                ws.results_dir / "retained.jsonl",
                plan,
                ws.results_dir / "ranking.json",
                ws.results_dir,
                cfg_hash,
                fad_dev_csv=ws.fad_csv("dev"),
                fad_eval_csv=ws.fad_csv("eval"),
            )
            summary[stage] = {"report": str(ws.results_dir / "report.json")}

    return summary
