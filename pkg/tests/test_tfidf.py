from __future__ import annotations

import math
import random

import pytest

from toxaudit.tfidf import (
    SparseVector,
    fit,
    idf,
    load_vocabulary,
    save_vocabulary,
    tf,
    transform,
)


class TestTf:
    def test_direct_formula(self):
        assert tf(2, 3) == 2 / 3

    def test_zero_count(self):
        assert tf(0, 5) == 0.0

    def test_single_term_document(self):
        assert tf(5, 5) == 1.0

    def test_zero_total_rejected(self):
        with pytest.raises(ValueError):
            tf(0, 0)

    def test_count_above_total_rejected(self):
        with pytest.raises(ValueError):
            tf(6, 5)


class TestIdf:
    def test_term_in_every_doc(self):
        assert idf(4, 4) == 0.0

    def test_rare_term(self):
        assert idf(4, 1) == pytest.approx(math.log(4), abs=1e-12)

    def test_single_doc(self):
        assert idf(1, 1) == 0.0

    def test_df_zero_rejected(self):
        with pytest.raises(ValueError):
            idf(4, 0)

    def test_df_above_n_rejected(self):
        with pytest.raises(ValueError):
            idf(4, 5)


class TestFit:
    def test_doc_freq_counts(self):
        vocab = fit([["a", "b"], ["b", "c"]])
        assert vocab.doc_freq == {"a": 1, "b": 2, "c": 1}
        assert vocab.n_docs == 2
        assert vocab.dimension == 3

    def test_max_features_keeps_highest_corpus_frequency(self):
        vocab = fit([["a", "b"], ["b", "c"]], max_features=1)
        assert set(vocab.term_index) == {"b"}

    def test_max_features_ties_break_lexicographically(self):
        # every term appears once; the cap keeps the alphabetically first
        vocab = fit([["zeta"], ["alpha"], ["midway"]], max_features=2)
        assert set(vocab.term_index) == {"alpha", "midway"}

    def test_indices_are_lexicographic_bijection(self):
        vocab = fit([["delta", "alpha"], ["charlie", "bravo"]])
        terms = sorted(vocab.term_index)
        assert [vocab.term_index[t] for t in terms] == list(range(len(terms)))

    def test_deterministic(self):
        docs = [["a", "b"], ["b", "c"]]
        assert fit(docs).term_index == fit(docs).term_index

    def test_order_independent(self):
        rng = random.Random(3)
        docs = [[rng.choice("abcdef") for _ in range(rng.randint(1, 6))] for _ in range(30)]
        shuffled = list(docs)
        rng.shuffle(shuffled)
        assert fit(docs) == fit(shuffled)

    def test_all_empty_rejected(self):
        with pytest.raises(ValueError):
            fit([[], []])
        with pytest.raises(ValueError):
            fit([])


class TestTransform:
    def test_hand_computed_values(self):
        vocab = fit([["a", "b"], ["b", "c"]])
        vec = transform(["a", "a", "b"], vocab)
        # a: tf 2/3, idf ln(2/1); b: idf ln(2/2) = 0, dropped
        assert vec.entries == [(vocab.term_index["a"], pytest.approx((2 / 3) * math.log(2)))]
        assert vec.dimension == 3

    def test_out_of_vocabulary_only(self):
        vocab = fit([["a", "b"], ["b", "c"]])
        assert transform(["zzz", "yyy"], vocab).entries == []

    def test_empty_document(self):
        vocab = fit([["a", "b"], ["b", "c"]])
        assert transform([], vocab).entries == []

    def test_no_stored_zeros_and_sorted(self):
        rng = random.Random(5)
        docs = [[rng.choice("abcdefgh") for _ in range(rng.randint(1, 10))] for _ in range(40)]
        vocab = fit(docs)
        for doc in docs:
            vec = transform(doc, vocab)
            indices = [i for i, _ in vec.entries]
            assert indices == sorted(set(indices))
            assert all(v != 0.0 for _, v in vec.entries)

    def test_transform_independent_of_other_documents(self):
        vocab = fit([["a", "b"], ["b", "c"]])
        doc = ["a", "c", "c"]
        first = transform(doc, vocab)
        transform(["b", "b", "b"], vocab)
        assert transform(doc, vocab) == first


class TestTfInvariant:
    def test_tf_sums_to_one_over_distinct_terms(self):
        rng = random.Random(6)
        for _ in range(100):
            doc = [rng.choice("abcde") for _ in range(rng.randint(1, 20))]
            total = len(doc)
            s = sum(tf(doc.count(t), total) for t in set(doc))
            assert s == pytest.approx(1.0, abs=1e-9)


class TestVocabularyFile:
    def test_round_trip(self, tmp_path):
        vocab = fit([["a", "b"], ["b", "c"], ["c", "c", "d"]], max_features=3)
        path = tmp_path / "vocab.tsv"
        save_vocabulary(vocab, path)
        assert load_vocabulary(path) == vocab

    def test_version_check(self, tmp_path):
        path = tmp_path / "vocab.tsv"
        path.write_text("# something-else v9\n", encoding="utf-8")
        with pytest.raises(Exception, match="version"):
            load_vocabulary(path)


class TestSparseVector:
    def test_defaults(self):
        vec = SparseVector()
        assert vec.entries == []
        assert vec.dimension == 0
