"""
Uni/bi-gram features for short messages.

Documents become sparse binary vectors (sorted tuples of active vocabulary ids).
Features are scored by information gain against the class label and the top K
are kept. Vocabulary and scores are fit on training documents only.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import pandas as pd
from scipy import sparse

logger = logging.getLogger(__name__)

DEFAULT_K = 1000

# A FeatureVector is a tuple of strictly increasing vocabulary ids (binary presence).
FeatureVector = tuple


def doc_ngrams(tokens: list) -> list:
    """Unigrams in order, then adjacent-pair bigrams ("tokA tokB") in order."""
    bigrams = [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    return list(tokens) + bigrams


class Vocabulary:
    """n-gram → dense id, ids assigned in first-seen order."""

    def __init__(self, ngrams=()):
        self.ngrams = []
        self.ids = {}
        for g in ngrams:
            self.add(g)

    def __len__(self) -> int:
        return len(self.ngrams)

    def __contains__(self, ngram) -> bool:
        return ngram in self.ids

    def add(self, ngram: str) -> int:
        if ngram not in self.ids:
            self.ids[ngram] = len(self.ngrams)
            self.ngrams.append(ngram)
        return self.ids[ngram]


def build_vocabulary(train_docs: list) -> Vocabulary:
    vocab = Vocabulary()
    for tokens in train_docs:
        for g in doc_ngrams(tokens):
            vocab.add(g)
    logger.info(f"Vocabulary: {len(vocab)} n-grams from {len(train_docs)} documents")
    return vocab


@dataclass(frozen=True)
class SelectedFeatures:
    """(feature id, ig bits) pairs, best first; ties by smaller feature id."""
    entries: tuple
    k_requested: int

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def id_set(self) -> frozenset:
        return frozenset(fid for fid, _ in self.entries)

    @cached_property
    def feature_ids(self) -> tuple:
        """Selected ids in ascending order (the forest's feature space)."""
        return tuple(sorted(self.id_set))

    def dump(self, path, vocab: Vocabulary) -> None:
        """Diagnostic CSV: rank,ngram,ig_bits."""
        rows = [
            {"rank": rank, "ngram": vocab.ngrams[fid], "ig_bits": score}
            for rank, (fid, score) in enumerate(self.entries, 1)
        ]
        df = pd.DataFrame(rows, columns=["rank", "ngram", "ig_bits"])
        df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")


def vectorize(doc: list, vocab: Vocabulary, selected: Optional[SelectedFeatures] = None) -> FeatureVector:
    """Active vocabulary ids of the doc's n-grams; OOV n-grams ignored, repeats counted once."""
    active = {vocab.ids[g] for g in doc_ngrams(doc) if g in vocab.ids}
    if selected is not None:
        active &= selected.id_set
    return tuple(sorted(active))


def _label_ids(labels) -> np.ndarray:
    return np.array([getattr(label, "id", label) for label in labels], dtype=np.int64)


def incidence_matrix(vectors: list, n_features: int) -> sparse.csr_matrix:
    """Documents × features 0/1 matrix."""
    indptr = [0]
    indices = []
    for vec in vectors:
        indices.extend(vec)
        indptr.append(len(indices))
    data = np.ones(len(indices), dtype=np.int64)
    return sparse.csr_matrix(
        (data, np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(vectors), n_features),
    )


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of each row of a count table; 0·log 0 := 0; empty rows score 0."""
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / np.maximum(totals, 1), 0.0)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -(p * logs).sum(axis=1)


def _ig_from_counts(present: np.ndarray, class_totals: np.ndarray) -> np.ndarray:
    """
    IG for every row of `present` (features × classes counts of documents
    containing the feature), given per-class document totals.
    """
    n = class_totals.sum()
    absent = class_totals[np.newaxis, :] - present
    h_c = _entropy_rows(class_totals[np.newaxis, :].astype(np.float64))[0]
    n_present = present.sum(axis=1)
    p1 = n_present / n
    p0 = (n - n_present) / n
    ig = h_c - (p1 * _entropy_rows(present.astype(np.float64)) + p0 * _entropy_rows(absent.astype(np.float64)))
    # Float residue on independent tables must not show up as a positive score.
    ig[np.abs(ig) < 1e-12] = 0.0
    return np.clip(ig, 0.0, h_c)


def _class_counts(vectors: list, labels, n_features: int):
    label_ids = _label_ids(labels)
    classes, inverse = np.unique(label_ids, return_inverse=True)
    onehot = np.zeros((len(label_ids), len(classes)), dtype=np.int64)
    onehot[np.arange(len(label_ids)), inverse] = 1
    X = incidence_matrix(vectors, n_features)
    present = np.asarray((X.T @ onehot))
    return present, onehot.sum(axis=0)


def information_gain(feature_id: int, vectors: list, labels) -> float:
    """IG in bits between the presence of one feature and the class label."""
    if len(vectors) != len(labels) or not vectors:
        raise ValueError("information_gain needs equally many vectors and labels (at least one)")
    label_ids = _label_ids(labels)
    classes, inverse = np.unique(label_ids, return_inverse=True)
    present = np.zeros((1, len(classes)), dtype=np.int64)
    totals = np.bincount(inverse, minlength=len(classes)).astype(np.int64)
    for vec, c in zip(vectors, inverse):
        if feature_id in vec:
            present[0, c] += 1
    return float(_ig_from_counts(present, totals)[0])


def score_features(vocab: Vocabulary, vectors: list, labels) -> np.ndarray:
    """IG for every vocabulary feature at once."""
    if len(vectors) != len(labels) or not vectors:
        raise ValueError("score_features needs equally many vectors and labels (at least one)")
    if len(vocab) == 0:
        return np.zeros(0)
    present, totals = _class_counts(vectors, labels, len(vocab))
    return _ig_from_counts(present, totals)


def select_top_k(vocab: Vocabulary, vectors: list, labels, k: int = DEFAULT_K) -> SelectedFeatures:
    """min(k, V) features by IG descending, ties by smaller feature id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = score_features(vocab, vectors, labels)
    ids = np.arange(len(scores))
    order = np.lexsort((ids, -scores))[:k]
    entries = tuple((int(i), float(scores[i])) for i in order)
    if entries:
        logger.info(f"Selected {len(entries)}/{len(vocab)} features (IG {entries[0][1]:.4f}..{entries[-1][1]:.4f})")
    return SelectedFeatures(entries=entries, k_requested=k)
