"""
Character-trigram language identification (out-of-place rank distance).

Profiles are either JSON files {"tag": ..., "trigrams": [...]} or plain
reference texts named <tag>.txt, profiled when loaded.
"""

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from pipeline.errors import ConfigError
from pipeline.text import strip_noise, tokenize

logger = logging.getLogger(__name__)

BUILTIN_LANGID_DIR = Path(__file__).resolve().parent.parent / "data" / "langid"
LANGID_ENV = "CRISDA_LANGID_DIR"
PROFILE_SIZE = 300
MIN_TEXT_CHARS = 12
MIN_CONFIDENCE = 0.2
UNDETERMINED = "und"


@dataclass(frozen=True)
class LanguageProfile:
    tag: str
    trigrams: tuple

    def __post_init__(self):
        if not self.trigrams:
            raise ValueError(f"language profile '{self.tag}' is empty")
        if len(set(self.trigrams)) != len(self.trigrams):
            raise ValueError(f"language profile '{self.tag}' repeats a trigram")

    def ranks(self) -> dict:
        return {g: r for r, g in enumerate(self.trigrams)}


class LanguageGuess(NamedTuple):
    tag: str
    confidence: float


def ranked_trigrams(text: str, limit: int = PROFILE_SIZE) -> list:
    """Frequency-ranked character trigrams of space-padded tokens; ties by trigram."""
    counts = Counter()
    for token in tokenize(strip_noise(text)):
        padded = f" {token} "
        for i in range(len(padded) - 2):
            counts[padded[i:i + 3]] += 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [g for g, _ in ordered[:limit]]


def build_profile(tag: str, text: str, limit: int = PROFILE_SIZE) -> LanguageProfile:
    return LanguageProfile(tag=tag.lower(), trigrams=tuple(ranked_trigrams(text, limit)))


def load_profiles(directory=None) -> list:
    """
    Load every profile in directory (default: $CRISDA_LANGID_DIR, else the built-in set).
    JSON profiles win over a reference text with the same tag.
    """
    directory = Path(directory or os.getenv(LANGID_ENV) or BUILTIN_LANGID_DIR)
    if not directory.is_dir():
        raise ConfigError(f"language profile directory {directory} does not exist")

    profiles = {}
    for path in sorted(directory.glob("*.txt")):
        profiles[path.stem.lower()] = build_profile(path.stem, path.read_text(encoding="utf-8"))
    for path in sorted(directory.glob("*.json")):
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
            profile = LanguageProfile(tag=str(raw["tag"]).lower(), trigrams=tuple(raw["trigrams"]))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad language profile {path}: {e}")
        profiles[profile.tag] = profile

    logger.info(f"Loaded {len(profiles)} language profiles from {directory}")
    return [profiles[tag] for tag in sorted(profiles)]


def identify_language(text: str, profiles: list) -> LanguageGuess:
    """
    Pick the profile with the smallest out-of-place distance to the text.
    confidence = 1 - dist / maxdist; below MIN_CONFIDENCE, or for texts shorter
    than MIN_TEXT_CHARS, the tag is "und".
    """
    if not profiles:
        raise ConfigError("identify_language needs at least one language profile")

    if len(strip_noise(text)) < MIN_TEXT_CHARS:
        return LanguageGuess(UNDETERMINED, 0.0)
    sample = ranked_trigrams(text)
    if not sample:
        return LanguageGuess(UNDETERMINED, 0.0)

    best_tag, best_conf = UNDETERMINED, -1.0
    for profile in profiles:
        ranks = profile.ranks()
        penalty = len(profile.trigrams)
        dist = 0
        for rank, gram in enumerate(sample):
            lang_rank = ranks.get(gram)
            dist += penalty if lang_rank is None else min(abs(rank - lang_rank), penalty)
        confidence = 1.0 - dist / (penalty * len(sample))
        if confidence > best_conf:
            best_tag, best_conf = profile.tag, confidence

    if best_conf < MIN_CONFIDENCE:
        return LanguageGuess(UNDETERMINED, best_conf)
    return LanguageGuess(best_tag, best_conf)
