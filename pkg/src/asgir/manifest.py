"""Dataset manifest: the CSV file that stands in for a download service.

One row per recording: path,label,region (region may be empty). The label
registry is derived from the manifest's sorted unique label set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import ArgumentError
from .labels import LabelRegistry


@dataclass(frozen=True)
class ManifestEntry:
    file_path: str
    species_label: str
    region_id: str | None = None


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    registry: LabelRegistry


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    entries: list[ManifestEntry] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["path", "label"]:
            raise ArgumentError("expected manifest header 'path,label,region'")
        for row in reader:
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2 or not row[0].strip() or not row[1].strip():
                raise ArgumentError(f"malformed manifest row {row!r}")
            region = row[2].strip() if len(row) > 2 and row[2].strip() else None
            entries.append(ManifestEntry(row[0].strip(), row[1].strip(), region))

    paths = [e.file_path for e in entries]
    if len(set(paths)) != len(paths):
        dupes = sorted({p for p in paths if paths.count(p) > 1})
        raise ArgumentError(f"duplicate manifest paths: {', '.join(dupes)}")
    if not entries:
        raise ArgumentError("manifest has no entries")

    registry = LabelRegistry.from_names(e.species_label for e in entries)
    return DatasetManifest(entries=entries, registry=registry)
