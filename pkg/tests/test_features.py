import math

import numpy as np
import pandas as pd
import pytest

from pipeline.features import (
    Vocabulary,
    build_vocabulary,
    doc_ngrams,
    information_gain,
    score_features,
    select_top_k,
    vectorize,
)


def entropy_oracle(counts):
    n = sum(counts)
    return -sum(c / n * math.log2(c / n) for c in counts if c)


def ig_oracle(feature, vectors, labels):
    """H(C) - sum over presence/absence of P(side)·H(C | side), by plain counting."""
    classes = sorted(set(labels))
    n = len(labels)
    h = entropy_oracle([labels.count(c) for c in classes])
    for side in (True, False):
        members = [y for v, y in zip(vectors, labels) if (feature in v) == side]
        if members:
            h -= len(members) / n * entropy_oracle([members.count(c) for c in classes])
    return h


def random_corpus(rng, max_docs=30, max_features=15):
    n_docs = int(rng.integers(1, max_docs + 1))
    n_features = int(rng.integers(1, max_features + 1))
    n_classes = int(rng.integers(2, 7))
    density = rng.random()
    vectors = [tuple(int(f) for f in np.flatnonzero(rng.random(n_features) < density)) for _ in range(n_docs)]
    labels = [int(c) for c in rng.integers(0, n_classes, size=n_docs)]
    return vectors, labels, n_features


class TestVocabulary:
    def test_unigrams_and_bigrams(self):
        vocab = build_vocabulary([["quake", "hits"]])
        assert vocab.ngrams == ["quake", "hits", "quake hits"]

    def test_shared_token_once(self):
        vocab = build_vocabulary([["quake"], ["quake", "now"]])
        assert vocab.ngrams.count("quake") == 1
        assert vocab.ids["quake"] == 0

    def test_empty_corpus(self):
        assert len(build_vocabulary([])) == 0

    def test_doc_ngrams_order(self):
        assert doc_ngrams(["a", "b", "c"]) == ["a", "b", "c", "a b", "b c"]


class TestVectorize:
    vocab = Vocabulary(["quake", "flood"])

    def test_known(self):
        assert vectorize(["quake"], self.vocab) == (0,)

    def test_oov_ignored(self):
        assert vectorize(["tsunami"], self.vocab) == ()

    def test_binary_presence(self):
        assert vectorize(["quake", "quake"], self.vocab) == (0,)

    def test_sorted_and_restricted(self):
        vocab = build_vocabulary([["flood", "quake"]])
        vectors = [vectorize(["flood", "quake"], vocab), vectorize(["quake"], vocab)]
        selected = select_top_k(vocab, vectors, [0, 1], k=1)
        assert vectorize(["flood", "quake"], vocab) == (0, 1, 2)
        assert vectorize(["quake", "flood"], vocab) == (0, 1)
        assert set(vectorize(["flood", "quake"], vocab, selected)) <= selected.id_set


class TestInformationGain:
    def test_perfect_feature_is_one_bit(self):
        vectors = [(0,), (0,), (), ()]
        assert information_gain(0, vectors, [0, 0, 1, 1]) == pytest.approx(1.0, abs=1e-12)

    def test_constant_feature_is_zero(self):
        vectors = [(0,), (0,), (0,), (0,)]
        assert information_gain(0, vectors, [0, 1, 0, 1]) == 0.0
        assert information_gain(1, vectors, [0, 1, 0, 1]) == 0.0

    def test_independent_margins_score_zero(self):
        # presence splits each class exactly in half
        vectors = [(0,), (), (0,), ()]
        assert information_gain(0, vectors, [0, 0, 1, 1]) == 0.0

    def test_mixed_ten_documents(self):
        vectors = [(0,), (0,), (0,), (), (), (0,), (), (), (0,), ()]
        labels = [0, 0, 0, 0, 1, 1, 1, 1, 1, 0]
        assert information_gain(0, vectors, labels) == pytest.approx(ig_oracle(0, vectors, labels), abs=1e-9)

    def test_matches_oracle_on_random_corpora(self):
        rng = np.random.default_rng(2016)
        for _ in range(200):
            vectors, labels, n_features = random_corpus(rng)
            vocab = Vocabulary([f"f{i}" for i in range(n_features)])
            scores = score_features(vocab, vectors, labels)
            bound = math.log2(len(set(labels))) if len(set(labels)) > 1 else 0.0
            for f in range(n_features):
                expected = ig_oracle(f, vectors, labels)
                assert information_gain(f, vectors, labels) == pytest.approx(expected, abs=1e-9)
                assert scores[f] == pytest.approx(expected, abs=1e-9)
                assert 0.0 <= scores[f] <= bound + 1e-12

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(3)
        vectors, labels, n_features = random_corpus(rng, max_docs=30)
        relabel = {c: 100 - 7 * c for c in set(labels)}
        renamed = [relabel[c] for c in labels]
        for f in range(n_features):
            assert information_gain(f, vectors, renamed) == pytest.approx(information_gain(f, vectors, labels), abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            information_gain(0, [(0,)], [])


class TestSelectTopK:
    def corpus(self):
        # f0 determines the class, f1 mostly does, f2 is noise
        vectors = [(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (2,), (), ()]
        labels = [0, 0, 0, 0, 1, 1, 1, 1]
        return Vocabulary(["a", "b", "c"]), vectors, labels

    def test_best_two(self):
        vocab, vectors, labels = self.corpus()
        selected = select_top_k(vocab, vectors, labels, k=2)
        assert [fid for fid, _ in selected.entries] == [0, 1]
        assert selected.feature_ids == (0, 1)

    def test_k_larger_than_vocabulary(self):
        vocab = Vocabulary([f"w{i}" for i in range(500)])
        vectors = [tuple(range(0, 500, 2)), tuple(range(1, 500, 2))]
        selected = select_top_k(vocab, vectors, [0, 1], k=1000)
        assert len(selected) == 500
        assert selected.k_requested == 1000

    def test_tie_goes_to_smaller_id(self):
        vocab = Vocabulary(["a", "b"])
        vectors = [(0, 1), (0, 1), (), ()]
        selected = select_top_k(vocab, vectors, [0, 0, 1, 1], k=1)
        assert selected.entries == ((0, pytest.approx(1.0)),)

    def test_k_below_one(self):
        vocab, vectors, labels = self.corpus()
        with pytest.raises(ValueError):
            select_top_k(vocab, vectors, labels, k=0)

    def test_monotone_cutoff(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            vectors, labels, n_features = random_corpus(rng)
            vocab = Vocabulary([f"f{i}" for i in range(n_features)])
            k = int(rng.integers(1, n_features + 1))
            selected = select_top_k(vocab, vectors, labels, k=k)
            scores = score_features(vocab, vectors, labels)
            inside = [scores[f] for f in selected.id_set]
            outside = [scores[f] for f in range(n_features) if f not in selected.id_set]
            assert len(selected) == min(k, n_features)
            if outside:
                assert min(inside) >= max(outside)
            ranked = [s for _, s in selected.entries]
            assert ranked == sorted(ranked, reverse=True)

    def test_dump(self, tmp_path):
        vocab, vectors, labels = self.corpus()
        selected = select_top_k(vocab, vectors, labels, k=3)
        path = tmp_path / "features.csv"
        selected.dump(path, vocab)
        df = pd.read_csv(path)
        assert list(df.columns) == ["rank", "ngram", "ig_bits"]
        assert df["ngram"].tolist()[:2] == ["a", "b"]
        assert df["rank"].tolist() == [1, 2, 3]
