"""
Corpus manifest: which crisis datasets exist, where their CSVs live,
and the label taxonomy they are annotated with.

Accepted shapes:
    [ {short_name, path, event_type, date, default_lang?, expected_count?}, ... ]
    { "labels": [...], "datasets": [ ... ] }
"""

import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional

from pipeline.errors import DataLoadError
from sources.taxonomy import Taxonomy

logger = logging.getLogger(__name__)

REQUIRED_FIELDS = ("short_name", "path", "event_type", "date")


@dataclass(frozen=True)
class DatasetEntry:
    """Metadata for one crisis dataset, as declared in the manifest."""
    short_name: str
    path: Path
    event_type: str
    date: date
    default_lang: Optional[str] = None
    expected_count: Optional[int] = None
    order: int = 0


@dataclass(frozen=True)
class Manifest:
    taxonomy: Taxonomy
    entries: tuple

    def entry(self, short_name: str) -> DatasetEntry:
        for e in self.entries:
            if e.short_name == short_name:
                return e
        raise KeyError(short_name)

    def names(self) -> list:
        return [e.short_name for e in self.entries]


def load_manifest(path) -> Manifest:
    """Read and validate a manifest JSON file. Dataset paths resolve against its directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DataLoadError(f"cannot read manifest {path}: {e}")
    except json.JSONDecodeError as e:
        raise DataLoadError(f"manifest {path} is not valid JSON: {e}")
    return parse_manifest(raw, base_dir=path.parent)


def parse_manifest(raw, base_dir: Path = Path(".")) -> Manifest:
    if isinstance(raw, list):
        labels, items = None, raw
    elif isinstance(raw, dict):
        labels, items = raw.get("labels"), raw.get("datasets", [])
    else:
        raise DataLoadError("manifest must be a JSON array or object")

    try:
        taxonomy = Taxonomy(labels) if labels is not None else Taxonomy()
    except ValueError as e:
        raise DataLoadError(f"manifest labels: {e}")

    if not isinstance(items, list):
        raise DataLoadError("manifest 'datasets' must be an array")

    entries = []
    seen = set()
    for i, item in enumerate(items):
        entry = _parse_entry(item, i, base_dir)
        if entry.short_name in seen:
            raise DataLoadError(f"manifest entry {i}: duplicate short_name '{entry.short_name}'")
        seen.add(entry.short_name)
        entries.append(entry)

    logger.info(f"Manifest: {len(entries)} datasets, {len(taxonomy)} labels")
    return Manifest(taxonomy=taxonomy, entries=tuple(entries))


def _parse_entry(item, index: int, base_dir: Path) -> DatasetEntry:
    if not isinstance(item, dict):
        raise DataLoadError(f"manifest entry {index}: expected an object")
    missing = [f for f in REQUIRED_FIELDS if not item.get(f)]
    if missing:
        raise DataLoadError(f"manifest entry {index}: missing {', '.join(missing)}")

    try:
        when = date.fromisoformat(str(item["date"]))
    except ValueError:
        raise DataLoadError(f"manifest entry {index}: date '{item['date']}' is not ISO-8601")

    expected = item.get("expected_count")
    if expected is not None and (not isinstance(expected, int) or expected < 0):
        raise DataLoadError(f"manifest entry {index}: expected_count must be a non-negative integer")

    lang = item.get("default_lang")
    return DatasetEntry(
        short_name=str(item["short_name"]),
        path=base_dir / str(item["path"]),
        event_type=str(item["event_type"]),
        date=when,
        default_lang=str(lang).lower() if lang else None,
        expected_count=expected,
        order=index,
    )
