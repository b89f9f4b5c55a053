"""TF-IDF vocabulary fitting and sparse document vectorization.

Term frequency is the within-document proportion f(t, d) / sum_t' f(t', d)
and inverse document frequency is the natural log of n_docs / df(t), with no
smoothing; df >= 1 by construction so no division by zero can arise.  The
log base only rescales features uniformly, which the downstream classifier's
weight scale absorbs.

A fitted Vocabulary is immutable; transform is pure and callable concurrently.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import SchemaError
from .textprep import TokenSeq

# Bounds memory on multi-million-row corpora; configurable everywhere it is used.
DEFAULT_MAX_FEATURES = 50_000

_VOCAB_FILE_VERSION = "tfidf-vocabulary v1"


@dataclass
class Vocabulary:
    """Term-to-column mapping plus the document frequencies behind idf."""

    term_index: dict[str, int]
    doc_freq: dict[str, int]
    n_docs: int
    max_features: int | None = None

    @property
    def dimension(self) -> int:
        return len(self.term_index)

    def idf(self, term: str) -> float:
        return idf(self.n_docs, self.doc_freq[term])


@dataclass
class SparseVector:
    """Sorted (column, value) pairs; zeros are never stored."""

    entries: list[tuple[int, float]] = field(default_factory=list)
    dimension: int = 0


def tf(term_count: int, doc_token_total: int) -> float:
    """Within-document term proportion."""
    if doc_token_total < 1:
        raise ValueError("doc_token_total must be at least 1")
    if term_count < 0 or term_count > doc_token_total:
        raise ValueError(f"term_count {term_count} outside [0, {doc_token_total}]")
    return term_count / doc_token_total


def idf(n_docs: int, df: int) -> float:
    """Natural log of n_docs / df; zero for a term present in every document."""
    if df < 1 or df > n_docs:
        raise ValueError(f"df must be in [1, {n_docs}], got {df}")
    return math.log(n_docs / df)


def fit(docs: Sequence[TokenSeq], max_features: int | None = DEFAULT_MAX_FEATURES) -> Vocabulary:
    """Build a vocabulary over all observed terms.

    When max_features caps the vocabulary, the terms with highest total
    corpus frequency are kept (ties broken lexicographically ascending).
    Column indices are assigned in lexicographic term order, so fitting is
    independent of document order.
    """
    if max_features is not None and max_features < 1:
        raise ValueError("max_features must be positive when set")

    doc_freq: Counter[str] = Counter()
    corpus_freq: Counter[str] = Counter()
    n_docs = 0
    for doc in docs:
        n_docs += 1
        corpus_freq.update(doc)
        doc_freq.update(set(doc))
    if n_docs == 0 or not doc_freq:
        raise ValueError("cannot fit on zero non-empty documents")

    terms = list(doc_freq)
    if max_features is not None and len(terms) > max_features:
        terms.sort(key=lambda t: (-corpus_freq[t], t))
        terms = terms[:max_features]
    terms.sort()

    return Vocabulary(
        term_index={t: i for i, t in enumerate(terms)},
        doc_freq={t: doc_freq[t] for t in terms},
        n_docs=n_docs,
        max_features=max_features,
    )


def transform(doc: TokenSeq, vocab: Vocabulary) -> SparseVector:
    """Vectorize one document: entry value is tf(t, doc) * idf(n_docs, df_t).

    Out-of-vocabulary terms are ignored; terms present in every fitted
    document have idf 0 and vanish from the output.
    """
    dimension = vocab.dimension
    if not doc:
        return SparseVector([], dimension)
    total = len(doc)
    entries = []
    for term, count in Counter(doc).items():
        index = vocab.term_index.get(term)
        if index is None:
            continue
        value = tf(count, total) * idf(vocab.n_docs, vocab.doc_freq[term])
        if value != 0.0:
            entries.append((index, value))
    entries.sort()
    return SparseVector(entries, dimension)


def transform_all(docs: Iterable[TokenSeq], vocab: Vocabulary) -> list[SparseVector]:
    return [transform(doc, vocab) for doc in docs]


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write a vocabulary to a versioned flat file (term, index, df per line)."""
    index_to_term = sorted((i, t) for t, i in vocab.term_index.items())
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(f"# {_VOCAB_FILE_VERSION}\n")
        stream.write(f"# n_docs={vocab.n_docs}\n")
        stream.write(f"# max_features={'' if vocab.max_features is None else vocab.max_features}\n")
        for index, term in index_to_term:
            stream.write(f"{term}\t{index}\t{vocab.doc_freq[term]}\n")


def load_vocabulary(path: str | Path) -> Vocabulary:
    with open(path, "r", encoding="utf-8") as stream:
        version = stream.readline().strip()
        if version != f"# {_VOCAB_FILE_VERSION}":
            raise SchemaError(f"unsupported vocabulary file version: {version!r}")
        n_docs = int(stream.readline().strip().removeprefix("# n_docs="))
        raw_max = stream.readline().strip().removeprefix("# max_features=")
        max_features = int(raw_max) if raw_max else None
        term_index: dict[str, int] = {}
        doc_freq: dict[str, int] = {}
        for line in stream:
            term, index, df = line.rstrip("\n").split("\t")
            term_index[term] = int(index)
            doc_freq[term] = int(df)
    return Vocabulary(term_index, doc_freq, n_docs, max_features)
