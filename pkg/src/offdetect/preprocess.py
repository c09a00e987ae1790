"""Tweet normalization, root reduction, vocabulary and padded index encoding."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .porter import stem_porter

__all__ = [
    "PAD_INDEX",
    "OOV_INDEX",
    "MODES",
    "Vocabulary",
    "IndexSequence",
    "clean",
    "tokenize",
    "stem_porter",
    "lemmatize_verb",
    "load_verb_exceptions",
    "default_verb_exceptions",
    "preprocess_corpus",
    "build_vocabulary",
    "encode_padded",
    "max_corpus_length",
    "TweetPreprocessor",
    "SequenceEncoder",
]

PAD_INDEX = 0
OOV_INDEX = 1
OOV_TOKEN = "<oov>"
MODES = ("none", "stem", "lemma")

_MENTION = re.compile(r"@\w*")
_HASHTAG = re.compile(r"#\w+")
_NON_ALPHA = re.compile(r"[^a-z ]+")
_SPACES = re.compile(r"\s+")


def clean(raw: str, drop_hashtag_body: bool = False) -> str:
    """Lowercase, drop user mentions, and keep only ``[a-z]`` words.

    Everything outside ``[a-z ]`` becomes a space, so the ``#`` of a hashtag
    goes but its body stays unless ``drop_hashtag_body`` is set.
    """
    text = raw.lower()
    text = _MENTION.sub(" ", text)
    if drop_hashtag_body:
        text = _HASHTAG.sub(" ", text)
    text = _NON_ALPHA.sub(" ", text)
    return _SPACES.sub(" ", text).strip()


def tokenize(cleaned: str) -> list:
    return cleaned.split()


def load_verb_exceptions(path) -> dict:
    """Parse an ``inflected<TAB>lemma`` table; ``#`` starts a comment."""
    with open(path, encoding="utf-8") as fh:
        return _parse_exceptions(fh.read(), str(path))


def _parse_exceptions(text, origin):
    table = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValueError(f"{origin}:{line_no}: expected 'inflected<TAB>lemma'")
        table[parts[0].strip()] = parts[1].strip()
    return table


_DEFAULT_EXCEPTIONS = None


def default_verb_exceptions() -> dict:
    global _DEFAULT_EXCEPTIONS
    if _DEFAULT_EXCEPTIONS is None:
        text = resources.files("offdetect").joinpath("data/verb_exceptions.tsv").read_text("utf-8")
        _DEFAULT_EXCEPTIONS = _parse_exceptions(text, "verb_exceptions.tsv")
    return dict(_DEFAULT_EXCEPTIONS)


_VOWELS = set("aeiou")


def _has_vowel(stem):
    return any(ch in _VOWELS for ch in stem) or "y" in stem[1:]


def _undo_inflection(stem):
    """Repair a stem left by stripping -ed/-ing."""
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in "aeiouylsz":
        return stem[:-1]  # stopp -> stop
    if stem.endswith(("v", "u", "bl", "iz")) or (stem.endswith("c") and len(stem) > 2):
        return stem + "e"  # lov -> love, argu -> argue, forc -> force
    if (
        len(stem) == 3
        and stem[0] not in _VOWELS
        and stem[1] in _VOWELS
        and stem[2] not in _VOWELS
        and stem[2] not in "wxy"
    ):
        return stem + "e"  # hat -> hate
    return stem


def lemmatize_verb(word: str, exceptions: Optional[Mapping[str, str]] = None) -> str:
    """Rule-based verb lemma with an irregular-form lookup table."""
    if exceptions is not None and word in exceptions:
        return exceptions[word]
    lemma = _verb_rules(word)
    if len(lemma) < 2 or not _has_vowel(lemma):
        return word
    return lemma


def _verb_rules(word):
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es"):
        stem = word[:-2]
        if stem.endswith(("s", "x", "z", "ch", "sh", "o")):
            return stem
        return word[:-1]
    if word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    if word.endswith("ing"):
        return _undo_inflection(word[:-3])
    if word.endswith("eed"):
        return word
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ed"):
        return _undo_inflection(word[:-2])
    return word


def preprocess_corpus(
    texts: Sequence[str],
    mode: str = "none",
    exceptions: Optional[Mapping[str, str]] = None,
    drop_hashtag_body: bool = False,
) -> list:
    """clean -> tokenize -> root reduction; ``mode`` picks exactly one reducer."""
    if mode not in MODES:
        raise ValueError(f"unknown preprocessing mode {mode!r}; expected one of {MODES}")
    if hasattr(texts, "texts"):
        texts = texts.texts()
    if mode == "lemma" and exceptions is None:
        exceptions = default_verb_exceptions()
    out = []
    for raw in texts:
        tokens = tokenize(clean(raw, drop_hashtag_body))
        if mode == "stem":
            tokens = [stem_porter(t) for t in tokens]
        elif mode == "lemma":
            tokens = [lemmatize_verb(t, exceptions) for t in tokens]
        out.append(tokens)
    return out


class Vocabulary:
    """Word/index maps with PAD at 0 and OOV at 1; real words start at 2."""

    def __init__(self, words: Sequence[str] = ()):
        self.index_to_word = {PAD_INDEX: "<pad>", OOV_INDEX: OOV_TOKEN}
        self.word_to_index = {}
        for w in words:
            if w in self.word_to_index:
                raise ValueError(f"duplicate vocabulary word {w!r}")
            idx = len(self.word_to_index) + 2
            self.word_to_index[w] = idx
            self.index_to_word[idx] = w

    def __len__(self):
        return len(self.word_to_index)

    def __contains__(self, word):
        return word in self.word_to_index

    @property
    def words(self) -> list:
        return list(self.word_to_index)

    @property
    def n_rows(self) -> int:
        """Rows needed by an embedding table indexed with this vocabulary."""
        return len(self) + 2

    def index(self, word: str) -> int:
        return self.word_to_index.get(word, OOV_INDEX)

    def decode(self, indices) -> list:
        return [self.index_to_word[int(i)] for i in indices]

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words

    def __repr__(self):
        return f"Vocabulary(size={len(self)})"


@dataclass(frozen=True)
class IndexSequence:
    indices: np.ndarray
    true_length: int


def build_vocabulary(corpus: Sequence[Sequence[str]]) -> Vocabulary:
    seen = {}
    for tokens in corpus:
        for t in tokens:
            seen.setdefault(t, None)
    return Vocabulary(list(seen))


def encode_padded(tokens: Sequence[str], vocab: Vocabulary, max_len: int) -> IndexSequence:
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    kept = tokens[:max_len]
    indices = np.zeros(max_len, dtype=np.int64)
    indices[: len(kept)] = [vocab.index(t) for t in kept]
    return IndexSequence(indices, len(kept))


def max_corpus_length(corpus: Sequence[Sequence[str]]) -> int:
    if len(corpus) == 0:
        raise ValueError("corpus must be non-empty")
    return max(len(tokens) for tokens in corpus)


class TweetPreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping raw tweets to token lists."""

    def __init__(self, mode="none", drop_hashtag_body=False, exceptions=None):
        self.mode = mode
        self.drop_hashtag_body = drop_hashtag_body
        self.exceptions = exceptions

    def fit(self, X, y=None):
        if self.mode not in MODES:
            raise ValueError(f"unknown preprocessing mode {self.mode!r}")
        return self

    def transform(self, X):
        return preprocess_corpus(
            list(X), self.mode, self.exceptions, self.drop_hashtag_body
        )


class SequenceEncoder(BaseEstimator, TransformerMixin):
    """Fit a vocabulary on token lists and emit zero-padded index arrays.

    ``max_len=None`` uses the longest training sequence (at least 1).
    """

    def __init__(self, max_len=None):
        self.max_len = max_len

    def fit(self, X, y=None):
        corpus = list(X)
        self.vocabulary_ = build_vocabulary(corpus)
        self.max_len_ = self.max_len or max(max_corpus_length(corpus), 1)
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        corpus = list(X)
        out = np.zeros((len(corpus), self.max_len_), dtype=np.int64)
        for row, tokens in enumerate(corpus):
            seq = encode_padded(tokens, self.vocabulary_, self.max_len_)
            out[row] = seq.indices
        return out
