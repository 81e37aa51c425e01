"""Deterministic report documents.

Reports are plain nested dicts serialized as JSON with insertion
ordering preserved, no timestamps, and every float rounded to 12
significant digits, so two runs over the same input produce
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass

import numpy as np

__all__ = ["ReportDocument", "round_floats", "file_digest", "write_csv"]


def round_floats(obj, sig: int = 12):
    """Recursively convert to JSON-friendly types with floats at ``sig`` digits."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (float, np.floating)):
        return float(f"{float(obj):.{sig}g}")
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [round_floats(v, sig) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): round_floats(v, sig) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, sig) for v in obj]
    return obj


@dataclass(frozen=True)
class ReportDocument:
    """A report: what was computed (kind), with what (parameters), results."""

    kind: str
    parameters: dict
    metrics: dict

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": round_floats(self.parameters),
            "metrics": round_floats(self.metrics),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())


def file_digest(path) -> str:
    """sha256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_csv(path, header, rows) -> None:
    """CSV with a fixed line terminator so output bytes are platform-stable."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else round_floats(v) for v in row])
