"""Dataset loading: numeric CSVs, text CSVs, the bundled Iris table and two
seeded synthetic generators.

Labels always come back as an int array over {-1, +1}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

IRIS_CLASSES = ("setosa", "versicolor", "virginica")
BUILTINS = ("iris", "synthetic_text", "synthetic_numeric")


class DatasetError(ValueError):
    """Bad schema, bad cell or unknown dataset name."""


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]


def _label_to_pm1(raw: str, where: str) -> int:
    v = raw.strip()
    if v in ("1", "+1", "1.0", "positive", "pos"):
        return 1
    if v in ("0", "-1", "0.0", "-1.0", "negative", "neg"):
        return -1
    raise DatasetError(f"{where}: label {raw!r} is not one of 0/1, -1/+1, negative/positive")


def load_numeric_csv(path) -> Dataset:
    """Numeric feature columns plus a ``label`` column (any position)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if "label" not in header:
        raise DatasetError(f"{path}: no 'label' column in header {header}")
    li = header.index("label")
    names = [h for i, h in enumerate(header) if i != li]
    X, y = [], []
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetError(f"{path}:{r}: expected {len(header)} cells, got {len(row)}")
        y.append(_label_to_pm1(row[li], f"{path}:{r}"))
        vals = []
        for i, cell in enumerate(row):
            if i == li:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(f"{path}:{r}: non-numeric cell {cell!r} in column {header[i]!r}") from None
            if not np.isfinite(v):
                raise DatasetError(f"{path}:{r}: non-finite cell in column {header[i]!r}")
            vals.append(v)
        X.append(vals)
    if not X:
        raise DatasetError(f"{path}: no data rows")
    return Dataset(np.array(X, dtype=float), np.array(y, dtype=int), names)


def load_iris(classes=("setosa", "versicolor")) -> Dataset:
    """Binary slice of the bundled Iris table; the first class becomes +1."""
    if classes is None or len(classes) != 2:
        raise DatasetError("iris needs a pair of classes, e.g. ('setosa', 'versicolor')")
    a, b = classes
    for c in classes:
        if c not in IRIS_CLASSES:
            raise DatasetError(f"unknown iris class {c!r}; choose from {IRIS_CLASSES}")
    if a == b:
        raise DatasetError("iris class pair must name two different classes")
    text = resources.files("qkclassify").joinpath("data/iris.csv").read_text(encoding="utf-8")
    rows = list(csv.reader(text.splitlines()))
    header, body = rows[0], rows[1:]
    species = [r[-1] for r in body]
    counts = {c: species.count(c) for c in IRIS_CLASSES}
    if len(body) != 150 or any(v != 50 for v in counts.values()):
        raise DatasetError(f"bundled iris table is corrupt: {len(body)} rows, counts {counts}")
    keep = [r for r in body if r[-1] in (a, b)]
    X = np.array([[float(v) for v in r[:-1]] for r in keep])
    y = np.array([1 if r[-1] == a else -1 for r in keep], dtype=int)
    return Dataset(X, y, header[:-1])


# Vocabulary for the synthetic review corpus. Sentiment words carry the
# signal; neutral words and stopwords are filler the pipeline must cope with.
_POSITIVE = ("great", "excellent", "wonderful", "loved", "brilliant", "superb",
             "enjoyable", "fantastic", "moving", "beautiful", "fun", "best")
_NEGATIVE = ("awful", "boring", "terrible", "waste", "worst", "dull",
             "poor", "hated", "mess", "bad", "weak", "annoying")
_NEUTRAL = ("movie", "film", "plot", "actors", "story", "scene", "director",
            "ending", "cast", "script")
_FILLER = ("the", "a", "was", "this", "and", "is", "it", "of", "very", "but")


def synthetic_reviews(n: int = 150, pos_fraction: float = 0.6, seed: int = 0,
                      signal: float = 0.8) -> tuple[list[str], np.ndarray]:
    """Seeded toy review corpus with markup, casing and punctuation noise.

    Each review holds two or three sentiment words; each one comes from its
    own class lexicon with probability ``signal`` and from the other lexicon
    otherwise. Labels are ``+1`` for positive reviews, listed first.
    """
    if n < 2:
        raise ValueError("need at least two reviews")
    rng = np.random.default_rng(seed)
    n_pos = int(round(pos_fraction * n))
    if not 0 < n_pos < n:
        raise ValueError("pos_fraction leaves a class empty")
    labels = np.array([1] * n_pos + [-1] * (n - n_pos), dtype=int)
    docs = []
    for lab in labels:
        own, other = (_POSITIVE, _NEGATIVE) if lab == 1 else (_NEGATIVE, _POSITIVE)
        words = []
        for _ in range(int(rng.integers(2, 4))):
            lex = own if rng.random() < signal else other
            words.append(str(rng.choice(lex)))
        words += [str(rng.choice(_NEUTRAL)) for _ in range(int(rng.integers(1, 3)))]
        words += [str(rng.choice(_FILLER)) for _ in range(int(rng.integers(1, 4)))]
        order = rng.permutation(len(words))
        words = [words[i] for i in order]
        words = [w.upper() if rng.random() < 0.1 else (w.capitalize() if rng.random() < 0.2 else w) for w in words]
        text = " ".join(words)
        if rng.random() < 0.3:
            text = text.replace(" ", " <br /> ", 1)
        text += str(rng.choice(["!", ".", "...", "!!", ""]))
        docs.append(text)
    return docs, labels


def synthetic_numeric(n: int = 150, d: int = 5, pos_fraction: float = 0.6, seed: int = 0,
                      margin: float = 0.6) -> Dataset:
    """Two Gaussian blobs in [0, 1]^d separated along a random direction."""
    rng = np.random.default_rng(seed)
    n_pos = int(round(pos_fraction * n))
    y = np.array([1] * n_pos + [-1] * (n - n_pos), dtype=int)
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    X = rng.normal(scale=0.15, size=(n, d)) + 0.5 + 0.5 * margin * y[:, None] * direction[None, :] / 2
    return Dataset(np.clip(X, 0.0, 1.0), y, [f"x{i}" for i in range(d)])


def minmax_scale(X, lo: float = 0.0, hi: float = np.pi, reference=None) -> np.ndarray:
    """Map each column to [lo, hi] using the min/max of ``reference`` (default X).

    Constant columns map to ``lo``.
    """
    X = np.asarray(X, dtype=float)
    ref = X if reference is None else np.asarray(reference, dtype=float)
    cmin, cmax = ref.min(axis=0), ref.max(axis=0)
    span = np.where(cmax > cmin, cmax - cmin, 1.0)
    return lo + (hi - lo) * (X - cmin) / span


def write_numeric_csv(path, data: Dataset) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.feature_names) + ["label"])
        for row, lab in zip(data.X, data.y):
            w.writerow([format(float(v), ".17g") for v in row] + [1 if lab == 1 else 0])
