"""
Crisis datasets: loading labeled CSVs, stratified train/test splits,
chronological ordering, language filtering and lexical overlap.

Datasets and splits are frozen once built and may be shared across threads.
"""

import hashlib
import logging
from dataclasses import dataclass, replace
from datetime import date
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from pipeline.errors import DataLoadError, PipelineError
from pipeline.langid import UNDETERMINED
from pipeline.text import StopwordTable, preprocess
from sources.manifest import DatasetEntry
from sources.taxonomy import CategoryLabel, Taxonomy

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("id", "text", "label")


@dataclass(frozen=True)
class Message:
    id: str
    text: str
    label: CategoryLabel
    lang: Optional[str] = None


@dataclass(frozen=True)
class Dataset:
    short_name: str
    event_type: str
    date: date
    messages: tuple
    default_lang: Optional[str] = None
    expected_count: Optional[int] = None
    order: int = 0

    def __len__(self) -> int:
        return len(self.messages)

    @cached_property
    def index(self) -> dict:
        return {m.id: m for m in self.messages}

    def select(self, ids: Iterable[str]) -> list:
        """Messages with the given ids, in dataset order."""
        wanted = set(ids)
        return [m for m in self.messages if m.id in wanted]


@dataclass(frozen=True)
class DatasetSplit:
    dataset: str
    seed: int
    test_fraction: Fraction
    train_ids: tuple
    test_ids: tuple

    @cached_property
    def test_digest(self) -> str:
        """sha256 over the test ids; identical test sets give identical digests."""
        h = hashlib.sha256(self.dataset.encode("utf-8"))
        for mid in self.test_ids:
            h.update(b"\x00" + mid.encode("utf-8"))
        return h.hexdigest()

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "test_fraction": str(self.test_fraction),
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "test_digest": self.test_digest,
        }


def load_dataset(path, entry: DatasetEntry, taxonomy: Taxonomy) -> Dataset:
    """
    Read a labeled CSV (header id,text,label[,lang]) into a Dataset.

    Row numbers in errors count the header as row 1.
    Raises DataLoadError on unknown/missing labels, empty texts,
    duplicate ids or an expected_count mismatch.
    """
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise DataLoadError(f"{entry.short_name}: file not found: {path}")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataLoadError(f"{entry.short_name}: cannot parse {path}: {e}")

    df.columns = [str(c).strip().lower() for c in df.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise DataLoadError(f"{entry.short_name}: {path} lacks column(s) {', '.join(missing)}")
    has_lang = "lang" in df.columns

    messages = []
    seen = set()
    for i, row in enumerate(df.itertuples(index=False)):
        rownum = i + 2
        record = row._asdict()
        mid = record["id"].strip()
        if not mid:
            raise DataLoadError(f"{entry.short_name}: empty message id", row=rownum)
        if mid in seen:
            raise DataLoadError(f"{entry.short_name}: duplicate message id '{mid}'", row=rownum)
        seen.add(mid)

        text = record["text"]
        if not text.strip():
            raise DataLoadError(f"{entry.short_name}: empty text for message '{mid}'", row=rownum)

        label_name = record["label"].strip()
        if not label_name:
            raise DataLoadError(f"{entry.short_name}: missing label for message '{mid}'", row=rownum)
        label = taxonomy.lookup(label_name)
        if label is None:
            raise DataLoadError(
                f"{entry.short_name}: unknown label '{label_name}' (taxonomy: {', '.join(taxonomy.names)})",
                row=rownum,
            )

        lang = record["lang"].strip().lower() if has_lang else ""
        messages.append(Message(id=mid, text=text, label=label, lang=lang or entry.default_lang))

    if entry.expected_count is not None and len(messages) != entry.expected_count:
        raise DataLoadError(
            f"{entry.short_name}: expected {entry.expected_count} messages, found {len(messages)}"
        )

    logger.info(f"Loaded {entry.short_name}: {len(messages)} messages from {path}")
    return Dataset(
        short_name=entry.short_name,
        event_type=entry.event_type,
        date=entry.date,
        messages=tuple(messages),
        default_lang=entry.default_lang,
        expected_count=entry.expected_count,
        order=entry.order,
    )


def as_fraction(value) -> Fraction:
    """Exact rational from a float/str/Fraction (0.3 → 3/10, not the binary float)."""
    if isinstance(value, Fraction):
        return value
    return Fraction(str(value))


def make_split(ds: Dataset, test_fraction, seed: int) -> DatasetSplit:
    """
    Stratified, seeded split. Per label c, round-half-up(test_fraction × n_c)
    messages go to test. Id lists keep dataset order.
    """
    frac = as_fraction(test_fraction)
    if not 0 < frac < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if not ds.messages:
        raise ValueError(f"{ds.short_name}: cannot split an empty dataset")

    by_label = {}
    for m in ds.messages:
        by_label.setdefault(m.label.id, []).append(m.id)

    rng = np.random.default_rng(seed)
    test = set()
    for label_id in sorted(by_label):
        ids = by_label[label_id]
        n_test = int(frac * len(ids) + Fraction(1, 2))
        order = rng.permutation(len(ids))
        test.update(ids[j] for j in order[:n_test])

    train_ids = tuple(m.id for m in ds.messages if m.id not in test)
    test_ids = tuple(m.id for m in ds.messages if m.id in test)
    logger.info(f"Split {ds.short_name}: {len(train_ids)} train / {len(test_ids)} test (seed {seed})")
    return DatasetSplit(
        dataset=ds.short_name,
        seed=seed,
        test_fraction=frac,
        train_ids=train_ids,
        test_ids=test_ids,
    )


def order_chronologically(datasets: list) -> list:
    """Ascending by date; equal dates keep manifest order."""
    return sorted(datasets, key=lambda d: (d.date, d.order))


def filter_language(ds: Dataset, lang: str) -> Dataset:
    """Keep only messages tagged `lang`. The result is named <short_name>-<LANG>."""
    lang = lang.lower()
    untagged = [m.id for m in ds.messages if not m.lang]
    if untagged:
        raise DataLoadError(
            f"{ds.short_name}: {len(untagged)} message(s) have no language tag "
            f"(first: '{untagged[0]}'); run `tag-languages` on the CSV or set default_lang in the manifest"
        )

    suffix = f"-{lang.upper()}"
    name = ds.short_name if ds.short_name.endswith(suffix) else ds.short_name + suffix
    kept = tuple(m for m in ds.messages if m.lang == lang)
    if not kept:
        logger.warning(f"{ds.short_name}: no messages tagged '{lang}'")
    return replace(ds, short_name=name, messages=kept, expected_count=None)


def text_tokens(text: str, lang: Optional[str], table: StopwordTable, fallback_langs: Iterable[str]) -> list:
    """Preprocess one text, removing stopwords of its language (fallback_langs when untagged or 'und')."""
    langs = (lang,) if lang and lang != UNDETERMINED else tuple(fallback_langs)
    return preprocess(text, langs, table)


def message_tokens(message: Message, table: StopwordTable, fallback_langs: Iterable[str]) -> list:
    return text_tokens(message.text, message.lang, table, fallback_langs)


def unigram_set(ds: Dataset, table: StopwordTable, fallback_langs: Optional[Iterable[str]] = None) -> set:
    fallback = tuple(fallback_langs) if fallback_langs is not None else tuple(table.languages)
    vocab = set()
    for m in ds.messages:
        vocab.update(message_tokens(m, table, fallback))
    return vocab


def lexical_overlap(a: Dataset, b: Dataset, table: Optional[StopwordTable] = None,
                    fallback_langs: Optional[Iterable[str]] = None) -> float:
    """Jaccard coefficient of the two datasets' post-preprocessing unigram sets."""
    table = table if table is not None else StopwordTable.load()
    va = unigram_set(a, table, fallback_langs)
    vb = unigram_set(b, table, fallback_langs)
    for ds, vocab in ((a, va), (b, vb)):
        if not vocab:
            raise PipelineError(f"{ds.short_name}: empty vocabulary after preprocessing")
    return len(va & vb) / len(va | vb)
