"""
Label taxonomy for crisis messages.
Defaults to the six information-type categories; a manifest can override it.
"""

from dataclasses import dataclass
from typing import Iterable, Optional

DEFAULT_LABELS = (
    "affected_individuals",
    "infrastructure_utilities",
    "donations_volunteering",
    "caution_advice",
    "sympathy_support",
    "other_useful",
)


@dataclass(frozen=True)
class CategoryLabel:
    id: int
    name: str


class Taxonomy:
    """Ordered label set. Ids are dense 0..L-1 in declaration order."""

    def __init__(self, names: Iterable[str] = DEFAULT_LABELS):
        names = [str(n).strip() for n in names]
        if not names:
            raise ValueError("taxonomy needs at least one label")
        if any(not n for n in names):
            raise ValueError("taxonomy label names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate label names in taxonomy: {names}")
        self.labels = tuple(CategoryLabel(i, n) for i, n in enumerate(names))
        self._by_name = {label.name: label for label in self.labels}

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, Taxonomy) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"Taxonomy({list(self.names)})"

    @property
    def names(self) -> tuple:
        return tuple(label.name for label in self.labels)

    def lookup(self, name: str) -> Optional[CategoryLabel]:
        return self._by_name.get(name.strip())

    def by_id(self, label_id: int) -> CategoryLabel:
        return self.labels[label_id]
