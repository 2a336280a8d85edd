from .taxonomy import DEFAULT_LABELS, CategoryLabel, Taxonomy
from .manifest import DatasetEntry, Manifest, load_manifest
from .corpus import Dataset, DatasetSplit, Message, load_dataset, make_split
