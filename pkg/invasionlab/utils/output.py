"""Headed output files: JSONL, CSV and JSON with a provenance header."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from invasionlab import __version__
from invasionlab.core.weightfield import MIXER_VERSION

__all__ = [
    "provenance",
    "write_csv",
    "read_csv",
    "start_jsonl",
    "append_jsonl",
    "read_jsonl",
    "write_json",
]


def provenance(config_hash: str, master_seed: int | None, **extra: Any) -> dict[str, Any]:
    """Header fields every output file carries."""
    header: dict[str, Any] = {
        "tool_version": __version__,
        "config_hash": config_hash,
        "master_seed": master_seed,
        "mixer": MIXER_VERSION,
    }
    header.update(extra)
    return header


def write_csv(
    path: Path,
    header: dict[str, Any],
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """Write ``# key=value`` header lines, the column row, then *rows*."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    header: dict[str, str] = {}
    body: list[str] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            header[key] = value
        else:
            body.append(line)
    return header, list(csv.DictReader(body))


def start_jsonl(path: Path, header: dict[str, Any]) -> Path:
    """Create (or truncate) *path* with a single header line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"header": header}, sort_keys=True) + "\n", encoding="utf-8")
    return path


def append_jsonl(path: Path, record: dict[str, Any]) -> None:
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_jsonl(path: Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """Header and records of a headed JSONL file; a torn last line is dropped."""
    header: dict[str, Any] = {}
    records: list[dict[str, Any]] = []
    lines = path.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                break
            raise
        if "header" in record and not records:
            header = record["header"]
        else:
            records.append(record)
    return header, records


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
