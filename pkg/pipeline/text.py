"""
Text normalization for short crisis messages.
noise stripping → tokenization → stopword removal, all deterministic.
"""

import logging
import os
import re
import unicodedata
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger(__name__)

BUILTIN_STOPWORDS_DIR = Path(__file__).resolve().parent.parent / "data" / "stopwords"
STOPWORDS_ENV = "CRISDA_STOPWORDS_DIR"

# URLs run up to the next whitespace; mentions are @ plus word characters.
NOISE_RE = re.compile(r"(?:https?://|www\.)\S*|@\w+", re.IGNORECASE)
WHITESPACE_RE = re.compile(r"\s+")
# Letters and digits (no underscore) plus apostrophes.
TOKEN_RE = re.compile(r"(?:[^\W_]|')+")
APOSTROPHES = str.maketrans({"\u2019": "'", "\u2018": "'", "\u02bc": "'"})


def strip_noise(text: str) -> str:
    """Remove URLs and @mentions, collapse whitespace, trim."""
    # Removing one match can expose another ("http@x://..."), so repeat until clean.
    previous = None
    while previous != text:
        previous = text
        text = NOISE_RE.sub(" ", text)
    return WHITESPACE_RE.sub(" ", text).strip()


def tokenize(text: str) -> list:
    """
    Lowercased tokens: maximal runs of letters, digits and apostrophes.
    '#' and every other symbol act as delimiters, so "#Nepal" gives "nepal".
    """
    text = unicodedata.normalize("NFKC", text).lower().translate(APOSTROPHES)
    tokens = []
    for match in TOKEN_RE.finditer(text):
        token = match.group()
        if token.strip("'"):
            tokens.append(token)
    return tokens


class StopwordTable:
    """Language tag → frozenset of lowercase stopwords. Unknown tags map to the empty set."""

    def __init__(self, lists: Optional[dict] = None):
        self._lists = {
            tag.lower(): frozenset(w.lower() for w in words)
            for tag, words in (lists or {}).items()
        }

    @classmethod
    def load(cls, override_dir=None) -> "StopwordTable":
        """
        Built-in lists, with any <lang>.txt in override_dir (or $CRISDA_STOPWORDS_DIR)
        replacing the built-in list for that language.
        """
        lists = _read_stopword_dir(BUILTIN_STOPWORDS_DIR)
        override_dir = override_dir or os.getenv(STOPWORDS_ENV)
        if override_dir:
            overrides = _read_stopword_dir(Path(override_dir))
            if not overrides:
                logger.warning(f"No stopword files found in {override_dir}")
            lists.update(overrides)
        return cls(lists)

    @property
    def languages(self) -> list:
        return sorted(self._lists)

    def words(self, lang: str) -> frozenset:
        return self._lists.get(lang.lower(), frozenset())

    def union(self, langs: Iterable[str]) -> frozenset:
        merged = set()
        for lang in langs:
            merged |= self.words(lang)
        return frozenset(merged)


def read_stopword_file(path) -> set:
    """One word per line; blank lines and '#' comments ignored."""
    words = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line.lower())
    return words


def _read_stopword_dir(directory: Path) -> dict:
    if not directory.is_dir():
        return {}
    return {p.stem.lower(): read_stopword_file(p) for p in sorted(directory.glob("*.txt"))}


def remove_stopwords(tokens: list, langs: Iterable[str], table: StopwordTable) -> list:
    stop = table.union(langs)
    return [t for t in tokens if t not in stop]


def preprocess(text: str, langs: Iterable[str], table: StopwordTable) -> list:
    """Full message pipeline: strip_noise → tokenize → remove_stopwords."""
    return remove_stopwords(tokenize(strip_noise(text)), langs, table)
