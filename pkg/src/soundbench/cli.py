"""Command-line entry point: one binary, one subcommand per pipeline stage.

Exit codes: 0 success, 1 validation violations in the data, 2 operational
errors (missing inputs, bad flags or config).
"""

from __future__ import annotations

import functools
import json
import os
from pathlib import Path

import click

from . import __version__
from .corpus.manifest import load_manifest, manifest_pcm_hashes, validate_split
from .corpus.submission import SubmissionSet, validate_submission
from .embed.store import write_embeddings
from .pipeline import (
    STAGES,
    ConfigError,
    PipelineConfig,
    StageInputError,
    Workspace,
    embed_import,
    embed_manifest_split,
    embed_submission,
    load_anchors_csv,
    load_finalists_csv,
    load_medoids_csv,
    load_raters_csv,
    load_referents_csv,
    load_systems_table,
    run_pipeline,
    stage_aggregate,
    stage_diversity,
    stage_exclude,
    stage_fad,
    stage_medoids,
    stage_plan,
    stage_preprocess_manifest,
    stage_preprocess_tree,
    stage_rank,
    stage_report,
    stage_screen,
    tomllib,
)
from .ratings.records import ingest_ratings
from .trials.plan import PlanBundle

_SPLIT_NAMES = {
    "dev": "development",
    "eval": "evaluation",
    "development": "development",
    "evaluation": "evaluation",
    "submission": "submission",
}


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    raise SystemExit(code)


def handle_errors(fn):
    """Map domain errors to exit 1 and operational errors to exit 2."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StageInputError as exc:
            _fail(str(exc), 2)
        except ConfigError as exc:
            _fail(str(exc), 2)
        except ValueError as exc:
            _fail(str(exc), 1)
        except OSError as exc:
            _fail(str(exc), 2)
        except RuntimeError as exc:
            _fail(str(exc), 2)

    return wrapper


def _load_config(config_path: str | None, **flags) -> PipelineConfig:
    base = PipelineConfig.from_toml(config_path) if config_path else PipelineConfig()
    return base.merged(**flags)


def _config_file_keys(config_path: str | None) -> set:
    if not config_path:
        return set()
    with open(config_path, "rb") as fh:
        return set(tomllib.load(fh))


def _parse_weights(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"--weights needs three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--weights needs numbers, got {text!r}") from None


def _parse_band(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"--band needs two comma-separated integers, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--band needs integers, got {text!r}") from None


config_option = click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="TOML config file; explicit flags win over its values.",
)


@click.group()
@click.version_option(version=__version__, prog_name="soundbench")
def main():
    """Evaluation harness for category-conditioned sound synthesis."""


# ----------------------------------------------------------------- corpus

@main.command()
@config_option
@click.option("--in", "in_dir", type=click.Path(), default=None, help="Input audio tree.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--policy", type=click.Choice(["max-rms", "first"]), default=None)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Conform the clips listed in this manifest instead of a tree.")
@handle_errors
def preprocess(config_path, in_dir, out_dir, policy, manifest_path):
    """Conform audio to mono 22.05 kHz 16-bit 4.0 s clips."""
    cfg = _load_config(config_path, policy=policy)
    cfg.validate()
    if manifest_path:
        manifest = stage_preprocess_manifest(manifest_path, out_dir, cfg.policy, cfg.hash)
        click.echo(f"wrote {len(manifest.entries)} clips to {out_dir}")
    elif in_dir:
        count = stage_preprocess_tree(in_dir, out_dir, cfg.policy)
        click.echo(f"wrote {count} clips to {out_dir}")
    else:
        raise ConfigError("pass --manifest or --in")


@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), required=True)
@click.option("--expected", type=int, default=100, show_default=True,
              help="Required evaluation clips per category.")
@handle_errors
def validate(manifest_path, expected):
    """Check manifest split hygiene: source overlap and per-category counts."""
    if not Path(manifest_path).exists():
        raise StageInputError(f"missing {manifest_path}; supply the corpus manifest")
    manifest = load_manifest(manifest_path)
    report = validate_split(manifest, expected_eval_count=expected)
    for violation in report.violations:
        click.echo(violation)
    if not report.ok:
        _fail(f"{len(report.violations)} split violations", 1)
    click.echo("ok")


@main.command("validate-submission")
@click.option("--dir", "submission_dir", type=click.Path(), required=True)
@click.option("--expected", type=int, default=100, show_default=True)
@click.option("--manifest", "manifest_path", type=click.Path(), default=None,
              help="Development manifest for exact-duplicate detection.")
@handle_errors
def validate_submission_cmd(submission_dir, expected, manifest_path):
    """Check one submission tree: counts, clip format, corpus duplicates."""
    if not Path(submission_dir).is_dir():
        raise StageInputError(f"missing {submission_dir}; supply the submission directory")
    sub = SubmissionSet.from_dir(submission_dir)
    dev_hashes = None
    if manifest_path:
        dev_hashes = manifest_pcm_hashes(load_manifest(manifest_path), "development")
    report = validate_submission(sub, expected, dev_hashes)
    for line in report.count_violations + report.format_violations + report.duplicates:
        click.echo(line)
    if not report.ok:
        _fail(f"submission {sub.system_id!r} failed validation", 1)
    click.echo(f"ok ({sub.system_id})")


# ------------------------------------------------------------------ embed

@main.command()
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--split", type=click.Choice(sorted(set(_SPLIT_NAMES))), default=None,
              help="Manifest split to embed (required with --manifest).")
@click.option("--submission", "submission_dir", type=click.Path(), default=None,
              help="Embed a submission tree instead of a manifest split.")
@click.option("--backend", type=click.Choice(["builtin", "import"]), default="builtin",
              show_default=True)
@click.option("--import-dir", type=click.Path(), default=None,
              help="Per-clip .femb files for the import backend.")
@click.option("--label", default="", help="Matrix label (defaults to split or system).")
@click.option("--out", "out_path", type=click.Path(), required=True)
@handle_errors
def embed(manifest_path, split, submission_dir, backend, import_dir, label, out_path):
    """Compute or import frame embeddings into one .femb matrix."""
    if manifest_path and submission_dir:
        raise ConfigError("pass --manifest or --submission, not both")
    if submission_dir:
        if backend != "builtin":
            raise ConfigError("--submission supports only the builtin backend")
        if not Path(submission_dir).is_dir():
            raise StageInputError(
                f"missing {submission_dir}; supply the submission directory"
            )
        sub = SubmissionSet.from_dir(submission_dir)
        matrix = embed_submission(sub)
    elif manifest_path:
        if not split:
            raise ConfigError("--manifest needs --split")
        split_name = _SPLIT_NAMES[split]
        manifest = load_manifest(manifest_path)
        if backend == "import":
            if not import_dir:
                raise ConfigError("import backend needs --import-dir")
            matrix = embed_import(
                manifest, split_name, label or split_name, import_dir
            )
        else:
            matrix = embed_manifest_split(manifest, split_name, label or split_name)
    else:
        raise ConfigError("pass --manifest or --submission")
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    write_embeddings(matrix, out_path)
    click.echo(
        f"wrote {len(matrix.clip_ids)} clips ({matrix.vectors.shape[0]} frames) "
        f"to {out_path}"
    )


# ---------------------------------------------------------------- metrics

@main.command()
@config_option
@click.option("--systems", "systems_dir", type=click.Path(), required=True,
              help="Directory of per-system .femb files.")
@click.option("--reference", "reference_path", type=click.Path(), required=True)
@click.option("--tag", type=click.Choice(["dev", "eval"]), required=True)
@click.option("--out", "out_csv", type=click.Path(), required=True)
@click.option("--meta", "meta_csv", type=click.Path(), default=None,
              help="systems.csv with track metadata for the track column.")
@handle_errors
def fad(config_path, systems_dir, reference_path, tag, out_csv, meta_csv):
    """Per-category distribution distances against a reference split."""
    cfg = _load_config(config_path)
    tracks = None
    if meta_csv:
        tracks = {s: m["track"] for s, m in load_systems_table(meta_csv).items()}
    table = stage_fad(systems_dir, reference_path, tag, out_csv, cfg.hash, tracks)
    click.echo(f"wrote {len(table.results)} systems to {out_csv}")


@main.command()
@config_option
@click.option("--fad", "fad_csv", type=click.Path(), required=True)
@click.option("--k", type=int, default=None, help="Finalists per track.")
@click.option("--out", "out_csv", type=click.Path(), required=True)
@handle_errors
def screen(config_path, fad_csv, k, out_csv):
    """Keep the k systems with lowest average distance per track."""
    cfg = _load_config(config_path, top_k=k)
    cfg.validate()
    rows = stage_screen(fad_csv, cfg.top_k, out_csv, cfg.hash)
    click.echo(f"wrote {len(rows)} finalists to {out_csv}")


# -------------------------------------------------------------- selection

@main.command()
@config_option
@click.option("--embeddings", "embeddings_path", type=click.Path(), required=True,
              help="One .femb file or a directory of them.")
@click.option("--k", type=int, default=None, help="Clusters per (system, category).")
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_csv", type=click.Path(), required=True)
@click.option("--only", "only_systems", multiple=True,
              help="Restrict to these system ids (repeatable).")
@handle_errors
def medoids(config_path, embeddings_path, k, seed, out_csv, only_systems):
    """Cluster each (system, category) and keep the medoid clips."""
    cfg = _load_config(config_path, k_medoids=k, seed=seed)
    cfg.validate()
    medoid_set = stage_medoids(
        embeddings_path, cfg.k_medoids, cfg.seed, out_csv, cfg.hash,
        only_systems=list(only_systems) or None,
    )
    click.echo(f"wrote {len(medoid_set.entries)} (system, category) pairs to {out_csv}")


@main.command("diversity-files")
@config_option
@click.option("--medoids", "medoids_csv", type=click.Path(), required=True)
@click.option("--audio", "audio_dir", type=click.Path(), required=True,
              help="Root holding the medoid clip audio.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--map", "map_path", type=click.Path(), required=True,
              help="Sealed token-to-system map (written 0600).")
@click.option("--seed", type=int, required=True)
@click.option("--gap", "gap_seconds", type=float, default=None,
              help="Silence between clips in seconds.")
@handle_errors
def diversity_files(config_path, medoids_csv, audio_dir, out_dir, map_path, seed,
                    gap_seconds):
    """Concatenate each system's medoids into one obfuscated long file."""
    cfg = _load_config(config_path, seed=seed, gap_seconds=gap_seconds)
    cfg.validate()
    sequences = stage_diversity(
        medoids_csv, audio_dir, out_dir, map_path, cfg.seed, cfg.gap_seconds
    )
    click.echo(f"wrote {len(sequences)} sequence files to {out_dir}")


# ------------------------------------------------------------------ plans

@main.command()
@config_option
@click.option("--finalists", "finalists_csv", type=click.Path(), required=True)
@click.option("--medoids", "medoids_csv", type=click.Path(), required=True)
@click.option("--anchors", "anchors_csv", type=click.Path(), required=True,
              help="clip_id,category,quality_pole,fit_pole,path")
@click.option("--referents", "referents_csv", type=click.Path(), required=True,
              help="clip_id,category,path")
@click.option("--raters", "raters_csv", type=click.Path(), required=True,
              help="rater_id,team_id,capacity,role")
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--band", default=None, help="Target ratings per clip, e.g. 10,15.")
@click.option("--diversity-map", "diversity_map", type=click.Path(), default=None)
@click.option("--diversity-dir", "diversity_dir", type=click.Path(), default=None)
@click.option("--submissions", "submissions_dir", type=click.Path(),
              default="submissions", show_default=True,
              help="Root the medoid clip ids resolve under.")
@click.option("--path-root", "path_root", type=click.Path(), default=None,
              help="Store clip paths relative to this directory so the plan "
                   "stays valid when the workspace moves.")
@handle_errors
def plan(config_path, finalists_csv, medoids_csv, anchors_csv, referents_csv,
         raters_csv, seed, out_dir, band, diversity_map, diversity_dir,
         submissions_dir, path_root):
    """Assign categories to raters and write counterbalanced session plans."""
    cfg = _load_config(config_path, seed=seed,
                       band=_parse_band(band) if band else None)
    cfg.validate()
    for path, what in (
        (finalists_csv, "finalists table"),
        (medoids_csv, "medoids table"),
        (anchors_csv, "anchors table"),
        (referents_csv, "referents table"),
        (raters_csv, "rater roster"),
    ):
        if not Path(path).exists():
            raise StageInputError(f"missing {path}; supply the {what}")
    bundle = stage_plan(
        load_referents_csv(referents_csv),
        load_anchors_csv(anchors_csv),
        load_finalists_csv(finalists_csv),
        load_medoids_csv(medoids_csv),
        load_raters_csv(raters_csv),
        cfg.seed,
        out_dir,
        cfg.hash,
        band=cfg.band,
        diversity_map=diversity_map,
        diversity_dir=diversity_dir,
        submissions_dir=submissions_dir,
        path_root=path_root,
    )
    click.echo(f"wrote {len(bundle.sessions)} session plans to {out_dir}")


# ------------------------------------------------------------------ serve

@main.command()
@click.option("--plans", "plans_path", type=click.Path(), required=True,
              help="Plans directory or sealed plan file.")
@click.option("--data", "data_dir", type=click.Path(), required=True,
              help="Directory for the ratings log and session snapshot.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--raters", "raters_csv", type=click.Path(), default=None,
              help="Roster used to stamp team ids onto records.")
@click.option("--audio-root", type=click.Path(), default="",
              help="Prefix for relative clip paths in the plan "
                   "(default: the directory holding the plans directory).")
@click.option("--static", "static_dir", type=click.Path(), default="",
              help="Frontend bundle to serve at /.")
@click.option("--unseal", is_flag=True, default=False,
              help="Export responses with resolved system and anchor fields.")
@click.option("--admin-token", envvar="SOUNDBENCH_ADMIN_TOKEN", default="",
              help="Export token (env SOUNDBENCH_ADMIN_TOKEN).")
@handle_errors
def serve(plans_path, data_dir, host, port, raters_csv, audio_root, static_dir,
          unseal, admin_token):
    """Run the listening-test HTTP service."""
    import uvicorn

    from .service.app import ServiceConfig, create_app

    plans_path = Path(plans_path)
    sealed = plans_path / "sealed_plan.json" if plans_path.is_dir() else plans_path
    if not sealed.exists():
        raise StageInputError(f"missing {sealed}; run the plan stage first")
    if not audio_root:
        # plans conventionally live one level under the workspace root
        audio_root = str(sealed.resolve().parent.parent)
    rater_teams = {}
    if raters_csv:
        rater_teams = {r.rater_id: r.team_id for r in load_raters_csv(raters_csv)}
    app = create_app(
        ServiceConfig(
            plan=PlanBundle.load_sealed(str(sealed)),
            data_dir=data_dir,
            admin_token=admin_token,
            rater_teams=rater_teams,
            audio_root=audio_root,
            static_dir=static_dir,
            unseal=unseal,
        )
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


# ---------------------------------------------------------------- results

@main.command()
@click.option("--ratings", "ratings_path", type=click.Path(), required=True)
@click.option("--plan", "plan_path", type=click.Path(), required=True,
              help="Sealed plan the records must belong to.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Optional JSON summary destination.")
@handle_errors
def ingest(ratings_path, plan_path, out_path):
    """Validate a ratings log against its sealed plan."""
    for path, producer in ((ratings_path, "serve"), (plan_path, "plan")):
        if not Path(path).exists():
            raise StageInputError(f"missing {path}; run the {producer} stage first")
    bundle = PlanBundle.load_sealed(plan_path)
    result = ingest_ratings(ratings_path, bundle)
    summary = {
        "records": len(result.records),
        "ack_lines": result.ack_lines,
        "duplicates": len(result.duplicates),
    }
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    click.echo(
        f"{summary['records']} rating records, {summary['ack_lines']} acks, "
        f"{summary['duplicates']} duplicates ignored"
    )


def _workspace(config_path, work_dir) -> tuple[PipelineConfig, Workspace]:
    cfg = _load_config(config_path, work_dir=work_dir)
    cfg.validate()
    return cfg, Workspace(cfg.work_dir, cfg)


@main.command()
@config_option
@click.option("--work", "work_dir", type=click.Path(), default=None,
              help="Workspace root the conventional paths hang off.")
@click.option("--ratings", "ratings_path", type=click.Path(), default=None)
@click.option("--plan", "plan_path", type=click.Path(), default=None)
@click.option("--systems", "systems_csv", type=click.Path(), default=None,
              help="system_id,track,team_id metadata table.")
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--count-all-anchors", is_flag=True, default=None,
              help="Count every anchor toward exclusion, not only high-quality poles.")
@handle_errors
def exclude(config_path, work_dir, ratings_path, plan_path, systems_csv, out_dir,
            count_all_anchors):
    """Apply session exclusion, anchor removal, and self-rating removal."""
    cfg, ws = _workspace(config_path, work_dir)
    if count_all_anchors:
        cfg = cfg.merged(count_all_anchors=True)
    plan_path = Path(plan_path) if plan_path else ws.sealed_plan
    if not plan_path.exists():
        raise StageInputError(f"missing {plan_path}; run the plan stage first")
    systems_csv = Path(systems_csv) if systems_csv else ws.systems_csv
    if not systems_csv.exists():
        raise StageInputError(f"missing {systems_csv}; supply the systems table")
    meta = load_systems_table(systems_csv)
    retained, report = stage_exclude(
        Path(ratings_path) if ratings_path else ws.ratings_jsonl,
        PlanBundle.load_sealed(str(plan_path)),
        {s: m["team_id"] for s, m in meta.items()},
        Path(out_dir) if out_dir else ws.results_dir,
        cfg.hash,
        cfg.count_all_anchors,
    )
    click.echo(
        f"excluded {len(report.excluded)} sessions; retained {report.retained} records"
    )


@main.command()
@config_option
@click.option("--work", "work_dir", type=click.Path(), default=None)
@click.option("--retained", "retained_path", type=click.Path(), default=None)
@click.option("--plan", "plan_path", type=click.Path(), default=None)
@click.option("--finalists", "finalists_csv", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@handle_errors
def aggregate(config_path, work_dir, retained_path, plan_path, finalists_csv,
              out_path):
    """Average retained ratings into per-system, per-category scores."""
    cfg, ws = _workspace(config_path, work_dir)
    plan_path = Path(plan_path) if plan_path else ws.sealed_plan
    if not plan_path.exists():
        raise StageInputError(f"missing {plan_path}; run the plan stage first")
    finalists_csv = Path(finalists_csv) if finalists_csv else ws.finalists_csv
    if not finalists_csv.exists():
        raise StageInputError(f"missing {finalists_csv}; run the screen stage first")
    finalists = load_finalists_csv(finalists_csv)
    aggregates = stage_aggregate(
        Path(retained_path) if retained_path else ws.results_dir / "retained.jsonl",
        PlanBundle.load_sealed(str(plan_path)),
        {f.system_id: f.track for f in finalists},
        Path(out_path) if out_path else ws.results_dir / "aggregates.json",
        cfg.hash,
    )
    click.echo(f"aggregated {len(aggregates)} systems")


@main.command()
@config_option
@click.option("--work", "work_dir", type=click.Path(), default=None)
@click.option("--weights", default=None, help="Quality,fit,diversity e.g. 1,1,0.5.")
@click.option("--fad", "fad_csv", type=click.Path(), default=None,
              help="Evaluation-reference distance table for tie-breaking.")
@click.option("--aggregates", "aggregates_path", type=click.Path(), default=None)
@click.option("--out-json", "out_json", type=click.Path(), default=None)
@click.option("--out-csv", "out_csv", type=click.Path(), default=None)
@handle_errors
def rank(config_path, work_dir, weights, fad_csv, aggregates_path, out_json, out_csv):
    """Weighted combined score and final per-track ranking."""
    cfg, ws = _workspace(config_path, work_dir)
    if weights:
        cfg = cfg.merged(weights=_parse_weights(weights))
        cfg.validate()
    ranking = stage_rank(
        Path(aggregates_path) if aggregates_path else ws.results_dir / "aggregates.json",
        tuple(cfg.weights),
        Path(fad_csv) if fad_csv else ws.fad_csv("eval"),
        Path(out_json) if out_json else ws.results_dir / "ranking.json",
        Path(out_csv) if out_csv else ws.results_dir / "ranking.csv",
        cfg.hash,
    )
    for entry in ranking.all_systems():
        combined = "-" if entry.combined is None else f"{entry.combined:.3f}"
        click.echo(f"track {entry.track} #{entry.rank} {entry.system_id} {combined}")


@main.command()
@config_option
@click.option("--work", "work_dir", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="report.json destination; companion CSVs go next to it.")
@handle_errors
def report(config_path, work_dir, out_path):
    """Correlation report plus screening and rank-agreement tables."""
    cfg, ws = _workspace(config_path, work_dir)
    out_dir = Path(out_path).parent if out_path else ws.results_dir
    plan_path = ws.sealed_plan
    if not plan_path.exists():
        raise StageInputError(f"missing {plan_path}; run the plan stage first")
    result = stage_report(
        ws.results_dir / "aggregates.json",
        ws.results_dir / "retained.jsonl",
        PlanBundle.load_sealed(str(plan_path)),
        ws.results_dir / "ranking.json",
        out_dir,
        cfg.hash,
        fad_dev_csv=ws.fad_csv("dev"),
        fad_eval_csv=ws.fad_csv("eval"),
    )
    if out_path and Path(out_path) != out_dir / "report.json":
        os.replace(out_dir / "report.json", out_path)
    click.echo(json.dumps(result, indent=2, sort_keys=True))


# -------------------------------------------------------------------- run

@main.command()
@config_option
@click.option("--work", "work_dir", type=click.Path(), default=None)
@click.option("--stages", "stages_text", default=None,
              help=f"Comma-separated subset of: {','.join(STAGES)}.")
@click.option("--seed", type=int, default=None)
@click.option("--k", "k_medoids", type=int, default=None)
@click.option("--top-k", "top_k", type=int, default=None)
@click.option("--weights", default=None)
@click.option("--band", default=None)
@click.option("--policy", type=click.Choice(["max-rms", "first"]), default=None)
@click.option("--expected", "expected_eval_count", type=int, default=None)
@click.option("--count-all-anchors", is_flag=True, default=None)
@click.option("--backend", "embed_backend", type=click.Choice(["builtin", "import"]),
              default=None)
@click.option("--import-dir", "import_dir", type=click.Path(), default=None)
@handle_errors
def run(config_path, work_dir, stages_text, seed, k_medoids, top_k, weights, band,
        policy, expected_eval_count, count_all_anchors, embed_backend, import_dir):
    """Run pipeline stages in order over one workspace."""
    cfg = _load_config(
        config_path,
        work_dir=work_dir,
        seed=seed,
        k_medoids=k_medoids,
        top_k=top_k,
        weights=_parse_weights(weights) if weights else None,
        band=_parse_band(band) if band else None,
        policy=policy,
        expected_eval_count=expected_eval_count,
        count_all_anchors=count_all_anchors,
        embed_backend=embed_backend,
        import_dir=import_dir,
    )
    cfg.validate()
    stages = None
    if stages_text:
        stages = [s.strip() for s in stages_text.split(",") if s.strip()]
    requested = set(stages) if stages else set(STAGES)
    seeded_stages = requested & {"medoids", "diversity", "plan"}
    if seeded_stages and seed is None and "seed" not in _config_file_keys(config_path):
        raise ConfigError(
            f"--seed is required for stages {sorted(seeded_stages)}"
        )
    summary = run_pipeline(cfg, stages, echo=click.echo)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
