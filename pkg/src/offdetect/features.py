"""Smoothed TF-IDF features and batch index encoding."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .preprocess import Vocabulary, encode_padded

__all__ = [
    "TfidfModel",
    "SparseVector",
    "fit_tfidf",
    "transform_tfidf",
    "encode_batch",
    "TfidfFeatures",
]


@dataclass(frozen=True)
class TfidfModel:
    """Fitted term columns with document frequencies.

    ``idf[t] = ln(n_docs / (df[t] + 1))``; terms present in every document
    get a negative weight, which is kept.
    """

    terms: dict
    df: np.ndarray
    n_docs: int
    idf: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.terms)

    @classmethod
    def from_counts(cls, terms: Sequence[str], df, n_docs: int) -> "TfidfModel":
        df = np.asarray(df, dtype=np.int64)
        idf = np.array([math.log(n_docs / (d + 1)) for d in df.tolist()], dtype=np.float64)
        return cls({t: i for i, t in enumerate(terms)}, df, int(n_docs), idf)


@dataclass(frozen=True)
class SparseVector:
    columns: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.columns)

    def as_dict(self) -> dict:
        return dict(zip(self.columns.tolist(), self.values.tolist()))


def fit_tfidf(corpus: Sequence[Sequence[str]]) -> TfidfModel:
    if len(corpus) == 0:
        raise ValueError("corpus must be non-empty")
    df = {}
    for tokens in corpus:
        for t in dict.fromkeys(tokens):
            df[t] = df.get(t, 0) + 1
    if not df:
        raise ValueError("corpus contains no tokens; no features to fit")
    return TfidfModel.from_counts(list(df), list(df.values()), len(corpus))


def transform_tfidf(model: TfidfModel, tokens: Sequence[str]) -> SparseVector:
    """Raw within-tweet count times idf, for fitted terms only."""
    pairs = []
    for term, count in Counter(tokens).items():
        col = model.terms.get(term)
        if col is None:
            continue
        value = count * model.idf[col]
        if value != 0.0:
            pairs.append((col, value))
    pairs.sort()
    columns = np.array([c for c, _ in pairs], dtype=np.int64)
    values = np.array([v for _, v in pairs], dtype=np.float64)
    return SparseVector(columns, values)


def encode_batch(corpus: Sequence[Sequence[str]], vocab: Vocabulary, max_len: int) -> list:
    return [encode_padded(tokens, vocab, max_len) for tokens in corpus]


def to_csr(vectors: Sequence[SparseVector], n_features: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v) for v in vectors])
    if vectors:
        indices = np.concatenate([v.columns for v in vectors])
        data = np.concatenate([v.values for v in vectors])
    else:
        indices = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), n_features))


class TfidfFeatures(BaseEstimator, TransformerMixin):
    """Token lists in, CSR TF-IDF matrix out."""

    def fit(self, X, y=None):
        self.model_ = fit_tfidf(list(X))
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        return to_csr([transform_tfidf(self.model_, t) for t in X], self.model_.n_features)
