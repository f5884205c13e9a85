"""Species label registry: a bijection between class ids and names."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ArgumentError


@dataclass(frozen=True)
class SpeciesLabel:
    id: int
    name: str


class LabelRegistry:
    """Immutable id <-> name mapping; ids are dense from 0."""

    def __init__(self, names: list[str]):
        if len(set(names)) != len(names):
            raise ArgumentError("duplicate species names in registry")
        self._names = list(names)
        self._ids = {name: i for i, name in enumerate(names)}

    @classmethod
    def from_names(cls, names) -> "LabelRegistry":
        """Registry over the sorted unique names (deterministic ids)."""
        return cls(sorted(set(names)))

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self):
        return (SpeciesLabel(i, n) for i, n in enumerate(self._names))

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def name_of(self, label_id: int) -> str:
        if not 0 <= label_id < len(self._names):
            raise ArgumentError(f"label id {label_id} out of range")
        return self._names[label_id]

    def id_of(self, name: str) -> int:
        if name not in self._ids:
            raise ArgumentError(f"unknown species name {name!r}")
        return self._ids[name]

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelRegistry) and other._names == self._names
