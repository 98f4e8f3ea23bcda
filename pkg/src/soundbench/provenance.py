"""Provenance stamps for artifact files.

Every CSV starts with comment lines and every JSON artifact carries a
`_provenance` object naming the config hash, the seed, and the tool
version, so a result file can always be traced to the run that made it.
Timestamps are deliberately absent: identical inputs and seed must produce
byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json

from . import __version__


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def provenance_dict(cfg_hash: str, seed: int | None) -> dict:
    out = {"config": cfg_hash, "tool": f"soundbench {__version__}"}
    if seed is not None:
        out["seed"] = seed
    return out


def csv_header_lines(cfg_hash: str, seed: int | None) -> list[str]:
    lines = [f"# config: {cfg_hash}", f"# tool: soundbench {__version__}"]
    if seed is not None:
        lines.insert(1, f"# seed: {seed}")
    return lines


def write_csv(path, header_fields: list[str], rows, cfg_hash: str, seed: int | None = None):
    """CSV with provenance comments, stable field order, and a final newline."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in csv_header_lines(cfg_hash, seed):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(header_fields)
        for row in rows:
            writer.writerow(row)


def write_json(path, payload: dict, cfg_hash: str, seed: int | None = None):
    payload = dict(payload)
    payload["_provenance"] = provenance_dict(cfg_hash, seed)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    """Read a provenance-stamped CSV back: (header fields, data rows)."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: no rows")
    return rows[0], rows[1:]
