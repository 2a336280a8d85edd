"""
Synthetic crisis "events" for exercising the harness without real data.

Each event draws its messages from class-conditional signal vocabularies
(shared across events, optionally mixed with event-specific signal) plus
event-specific noise tokens. Vocabularies can be "translated" with a
controlled overlap to imitate related languages, and pure-noise sources
carry random tokens with random labels.
"""

from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from sources.corpus import Dataset, Message
from sources.taxonomy import Taxonomy

DEFAULT_NOISE_RATE = 0.3
DEFAULT_DOC_LEN = (6, 12)


def signal_vocabulary(n_classes: int, per_class: int = 20, prefix: str = "sig") -> tuple:
    """One tuple of signal tokens per class, disjoint across classes."""
    return tuple(tuple(f"{prefix}{c}w{i}" for i in range(per_class)) for c in range(n_classes))


def translate_vocabulary(vocab: tuple, overlap: float, prefix: str, seed: int) -> tuple:
    """
    Copy of vocab in which round(overlap × size) tokens per class are kept and
    the rest replaced by tokens unique to `prefix`.
    """
    rng = np.random.default_rng(seed)
    out = []
    for c, tokens in enumerate(vocab):
        keep = int(round(overlap * len(tokens)))
        kept = set(rng.permutation(len(tokens))[:keep].tolist())
        out.append(tuple(t if i in kept else f"{prefix}{c}w{i}" for i, t in enumerate(tokens)))
    return tuple(out)


def generate_event(short_name: str, n_docs: int, taxonomy: Taxonomy, seed: int,
                   shared: tuple, specific: Optional[tuple] = None,
                   specific_rate: float = 0.5, noise_rate: float = DEFAULT_NOISE_RATE,
                   confusion: float = 0.25, noise_vocab_size: int = 150,
                   doc_len: Sequence[int] = DEFAULT_DOC_LEN, event_type: str = "earthquake",
                   when: date = date(2013, 1, 1), lang: Optional[str] = "en", order: int = 0) -> Dataset:
    """
    n_docs messages with uniformly drawn labels over the first len(shared) classes.

    Each token is event noise with probability noise_rate; otherwise a signal
    token of the message's class (or, with probability `confusion`, of a random
    class), drawn from `specific` with probability specific_rate when given and
    from `shared` otherwise.
    """
    rng = np.random.default_rng(seed)
    n_classes = len(shared)
    stem = short_name.lower()
    noise = [f"{stem}n{j}" for j in range(noise_vocab_size)]
    messages = []
    for i in range(n_docs):
        label = int(rng.integers(0, n_classes))
        length = int(rng.integers(doc_len[0], doc_len[1] + 1))
        tokens = []
        for _ in range(length):
            if rng.random() < noise_rate:
                tokens.append(noise[int(rng.integers(0, len(noise)))])
                continue
            c = int(rng.integers(0, n_classes)) if rng.random() < confusion else label
            pool = specific[c] if specific is not None and rng.random() < specific_rate else shared[c]
            tokens.append(pool[int(rng.integers(0, len(pool)))])
        messages.append(Message(
            id=f"{short_name}-{i:05d}",
            text=" ".join(tokens),
            label=taxonomy.by_id(label),
            lang=lang,
        ))
    return Dataset(short_name=short_name, event_type=event_type, date=when,
                   messages=tuple(messages), default_lang=lang, order=order)


def noise_dataset(short_name: str, n_docs: int, taxonomy: Taxonomy, seed: int, n_classes: Optional[int] = None,
                  vocab_size: int = 400, doc_len: Sequence[int] = DEFAULT_DOC_LEN,
                  event_type: str = "earthquake", when: date = date(2013, 1, 1)) -> Dataset:
    """Random tokens from a private vocabulary with random labels."""
    rng = np.random.default_rng(seed)
    n_classes = n_classes or len(taxonomy)
    stem = short_name.lower()
    messages = []
    for i in range(n_docs):
        length = int(rng.integers(doc_len[0], doc_len[1] + 1))
        tokens = [f"{stem}r{int(j)}" for j in rng.integers(0, vocab_size, size=length)]
        messages.append(Message(
            id=f"{short_name}-{i:05d}",
            text=" ".join(tokens),
            label=taxonomy.by_id(int(rng.integers(0, n_classes))),
            lang="en",
        ))
    return Dataset(short_name=short_name, event_type=event_type, date=when,
                   messages=tuple(messages), default_lang="en")


def write_csv(ds: Dataset, path) -> Path:
    """id,text,label,lang CSV readable by load_dataset."""
    path = Path(path)
    df = pd.DataFrame(
        [{"id": m.id, "text": m.text, "label": m.label.name, "lang": m.lang or ""} for m in ds.messages],
        columns=["id", "text", "label", "lang"],
    )
    df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def manifest_entry(ds: Dataset, path) -> dict:
    return {
        "short_name": ds.short_name,
        "path": str(path),
        "event_type": ds.event_type,
        "date": ds.date.isoformat(),
        "expected_count": len(ds.messages),
    }
