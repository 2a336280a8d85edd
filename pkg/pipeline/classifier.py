"""
TextClassifier: preprocessing + vocabulary + IG selection + forest,
fit on one training set and applied to raw messages.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from pipeline.errors import PipelineError
from pipeline.features import (
    SelectedFeatures,
    Vocabulary,
    build_vocabulary,
    select_top_k,
    vectorize,
)
from pipeline.forest import ForestConfig, RandomForest, predict_proba_many, train_forest
from pipeline.text import StopwordTable
from sources.corpus import text_tokens
from sources.taxonomy import Taxonomy

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TextClassifier:
    taxonomy: Taxonomy
    table: StopwordTable
    fallback_langs: tuple
    vocab: Vocabulary
    selected: SelectedFeatures
    forest: RandomForest

    def tokens(self, text: str, lang: Optional[str] = None) -> list:
        return text_tokens(text, lang, self.table, self.fallback_langs)

    def vectorize(self, text: str, lang: Optional[str] = None) -> tuple:
        return vectorize(self.tokens(text, lang), self.vocab, self.selected)

    def predict_proba(self, texts: Sequence[str], langs: Optional[Sequence] = None) -> np.ndarray:
        langs = langs if langs is not None else [None] * len(texts)
        vectors = [self.vectorize(t, lang) for t, lang in zip(texts, langs)]
        return predict_proba_many(self.forest, vectors)

    def predict_messages(self, messages: Sequence) -> np.ndarray:
        return self.predict_proba([m.text for m in messages], [m.lang for m in messages])


def fit_classifier(messages: Sequence, taxonomy: Taxonomy, table: StopwordTable,
                   fallback_langs: Sequence[str], feature_k: int, forest_cfg: ForestConfig,
                   n_jobs: int = 1) -> TextClassifier:
    """
    Fit on training messages only: vocabulary, IG scores and trees never see
    anything else.

    Raises PipelineError for a training set covering fewer than two classes.
    """
    if not messages:
        raise PipelineError("training set is empty")
    classes = {m.label.id for m in messages}
    if len(classes) < 2:
        raise PipelineError(f"degenerate training set: {len(messages)} messages cover {len(classes)} class(es)")

    fallback = tuple(fallback_langs)
    docs = [text_tokens(m.text, m.lang, table, fallback) for m in messages]
    labels = [m.label.id for m in messages]

    vocab = build_vocabulary(docs)
    if len(vocab) == 0:
        raise PipelineError("training vocabulary is empty after preprocessing")
    full_vectors = [vectorize(d, vocab) for d in docs]
    selected = select_top_k(vocab, full_vectors, labels, feature_k)

    keep = selected.id_set
    samples = [(tuple(f for f in vec if f in keep), label) for vec, label in zip(full_vectors, labels)]
    forest = train_forest(samples, forest_cfg, feature_space=selected.feature_ids,
                          label_count=len(taxonomy), n_jobs=n_jobs)
    return TextClassifier(
        taxonomy=taxonomy,
        table=table,
        fallback_langs=fallback,
        vocab=vocab,
        selected=selected,
        forest=forest,
    )
