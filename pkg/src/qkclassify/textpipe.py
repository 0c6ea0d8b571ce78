"""Review text cleaning, bag-of-words counts and row L2 normalisation."""

from __future__ import annotations

import csv
import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_MARKUP = re.compile(r"<[^>]*>")
_PUNCT = re.compile(r"[^\w\s]|_")


def _stopword_text() -> str:
    return resources.files("qkclassify").joinpath("data/stopwords.txt").read_text(encoding="utf-8")


def default_stopwords() -> frozenset[str]:
    return frozenset(w.strip() for w in _stopword_text().splitlines() if w.strip())


def stopwords_digest() -> str:
    """SHA-256 of the shipped stopword file, recorded in run reports."""
    return hashlib.sha256(_stopword_text().encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CleanOptions:
    lowercase: bool = True
    strip_markup: bool = True
    strip_punctuation: bool = True
    remove_stopwords: bool = True
    stopword_list: frozenset[str] = field(default_factory=default_stopwords)

    def __post_init__(self):
        object.__setattr__(self, "stopword_list", frozenset(self.stopword_list))
        if self.remove_stopwords and not self.stopword_list:
            raise ValueError("remove_stopwords is set but the stopword list is empty")


@dataclass
class Vocabulary:
    tokens: list[str]
    index: dict[str, int]

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "Vocabulary":
        ordered = sorted(set(tokens))
        return cls(ordered, {t: i for i, t in enumerate(ordered)})

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class DocTermMatrix:
    vocabulary: Vocabulary
    counts: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape


def clean_document(text: str, options: CleanOptions) -> list[str]:
    if options.strip_markup:
        text = _MARKUP.sub(" ", text)
    if options.lowercase:
        text = text.lower()
    if options.strip_punctuation:
        text = _PUNCT.sub(" ", text)
    tokens = text.split()
    if options.remove_stopwords:
        tokens = [t for t in tokens if t not in options.stopword_list]
    return tokens


def preprocess_corpus(docs: Sequence[str], options: CleanOptions = CleanOptions()) -> list[list[str]]:
    """Apply markup strip, lowercase, punctuation strip, whitespace split and
    stopword removal (each toggleable) to every document.

    Documents left empty are kept as empty token lists; see ``empty_documents``.
    """
    if len(docs) == 0:
        raise ValueError("empty corpus")
    return [clean_document(d, options) for d in docs]


def empty_documents(tokenized: Sequence[Sequence[str]]) -> list[int]:
    return [i for i, toks in enumerate(tokenized) if not toks]


def vectorize(tokenized: Sequence[Sequence[str]], max_features: int | None = None) -> DocTermMatrix:
    """Count matrix over a lexicographically ordered vocabulary.

    ``max_features`` keeps only the most frequent tokens (corpus-wide count,
    ties broken lexicographically); the kept vocabulary is still sorted.
    """
    if len(tokenized) == 0:
        raise ValueError("empty corpus")
    totals = Counter(t for doc in tokenized for t in doc)
    keep = totals.keys()
    if max_features is not None and max_features < len(totals):
        keep = [t for t, _ in sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]]
    vocab = Vocabulary.from_tokens(keep)
    counts = np.zeros((len(tokenized), len(vocab)))
    for i, doc in enumerate(tokenized):
        for tok, c in Counter(doc).items():
            j = vocab.index.get(tok)
            if j is not None:
                counts[i, j] = c
    return DocTermMatrix(vocab, counts)


def l2_normalize(m):
    """Divide each nonzero row by its Euclidean norm; zero rows stay zero.

    Accepts a ``DocTermMatrix`` or a plain 2-D array and returns the same kind.
    """
    arr = m.counts if isinstance(m, DocTermMatrix) else np.asarray(m, dtype=float)
    norms = np.sqrt((arr * arr).sum(axis=1, keepdims=True))
    out = np.divide(arr, norms, out=np.zeros_like(arr, dtype=float), where=norms > 0)
    if isinstance(m, DocTermMatrix):
        return DocTermMatrix(m.vocabulary, out)
    return out


def read_text_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a ``text,label`` CSV (labels 0/1) and return texts and -1/+1 labels."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"text", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns 'text' and 'label'")
        rows = list(reader)
    texts = [r["text"] for r in rows]
    labels = []
    for line, r in enumerate(rows, start=2):
        try:
            v = int(r["label"])
        except ValueError:
            raise ValueError(f"{path}:{line}: label {r['label']!r} is not an integer") from None
        if v not in (0, 1):
            raise ValueError(f"{path}:{line}: label must be 0 or 1, got {v}")
        labels.append(1 if v == 1 else -1)
    return texts, np.array(labels, dtype=int)


def write_dtm_csv(path: str | Path, dtm: DocTermMatrix, labels: Sequence[int]) -> None:
    """Header is the vocabulary plus ``label`` (written as 0/1)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(dtm.vocabulary.tokens) + ["label"])
        for row, lab in zip(dtm.counts, labels):
            w.writerow([format(v, ".17g") for v in row] + [1 if lab == 1 else 0])
