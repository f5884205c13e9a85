"""Region-conditioned restriction of classifier decisions.

A region index maps region ids to the set of species known to occur
there; masking sets the scores of all other species to -inf, so the
argmax is always a species from the chosen region.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import RegionError
from .labels import LabelRegistry


@dataclass
class RegionIndex:
    regions: dict[str, frozenset[int]]
    display_names: dict[str, str] = field(default_factory=dict)

    def species_ids(self, region_id: str) -> frozenset[int]:
        if region_id not in self.regions:
            raise RegionError(f"unknown region {region_id!r}")
        return self.regions[region_id]

    def display_name(self, region_id: str) -> str:
        return self.display_names.get(region_id, region_id)

    def region_ids(self) -> list[str]:
        return sorted(self.regions)


def load_region_index(data: bytes, registry: LabelRegistry) -> RegionIndex:
    """Parse a region index from CSV (header region,species) or a JSON map.

    JSON values are species name lists, or objects with "name" and
    "species" keys. Duplicate rows are deduplicated; species names not in
    the registry are fatal and reported together.
    """
    text = data.decode("utf-8")
    pairs: list[tuple[str, str]] = []
    display: dict[str, str] = {}

    stripped = text.lstrip()
    if stripped.startswith("{"):
        parsed = json.loads(text)
        for region_id, value in parsed.items():
            if isinstance(value, dict):
                display[region_id] = str(value.get("name", region_id))
                species = value.get("species", [])
            else:
                species = value
            for name in species:
                pairs.append((region_id, name))
    else:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["region", "species"]:
            raise RegionError("expected CSV header 'region,species'")
        for row in reader:
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise RegionError(f"malformed region row {row!r}")
            pairs.append((row[0].strip(), row[1].strip()))

    unknown = sorted({name for _, name in pairs if name not in registry})
    if unknown:
        raise RegionError(f"unknown species names: {', '.join(unknown)}")

    regions: dict[str, set[int]] = {}
    for region_id, name in pairs:
        regions.setdefault(region_id, set()).add(registry.id_of(name))
    empty = sorted(r for r, s in regions.items() if not s)
    if not regions or empty:
        raise RegionError(f"empty region set: {empty or 'no regions'}")

    return RegionIndex(
        regions={r: frozenset(s) for r, s in regions.items()},
        display_names=display,
    )


def mask_scores(
    scores: np.ndarray, region_id: str | None, index: RegionIndex
) -> np.ndarray:
    """Scores with species outside the region forced to -inf.

    No region means no restriction; the input is returned unchanged.
    """
    if region_id is None:
        return scores
    allowed = index.species_ids(region_id)
    masked = np.array(scores, dtype=np.float64, copy=True)
    keep = np.zeros(len(masked), dtype=bool)
    keep[list(allowed)] = True
    masked[~keep] = -np.inf
    return masked
