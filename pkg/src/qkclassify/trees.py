"""CART decision trees with Gini splits, and random-forest Gini importances.

Labels are ``-1``/``+1``. Split thresholds are midpoints between consecutive
distinct values and samples with ``x <= threshold`` go left. Among splits of
equal impurity decrease the lowest feature index wins, then the lowest
threshold. A node is only split when the decrease is strictly positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .svm import DegenerateLabelsError

_EPS = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 5
    min_samples_split: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 50
    tree: TreeConfig = field(default_factory=TreeConfig)
    bootstrap: bool = True
    features_per_split: int | None = None  # None -> ceil(sqrt(d))

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")

    def resolved_features(self, d: int) -> int:
        m = self.features_per_split or math.ceil(math.sqrt(d))
        return min(m, d)


@dataclass
class DecisionTree:
    n_features: int
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    positive_fraction: list[float] = field(default_factory=list)
    importances: np.ndarray | None = None

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def _leaf_of(self, x: np.ndarray) -> int:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return i


def gini(y) -> float:
    y = np.asarray(y)
    if y.size == 0:
        return 0.0
    p = float(np.mean(y == 1))
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, idx, features):
    n = idx.size
    pos = y[idx] == 1
    total_pos = int(pos.sum())
    parent = 1.0 - (total_pos / n) ** 2 - (1 - total_pos / n) ** 2
    best_gain, best_f, best_t = _EPS, -1, 0.0
    nl = np.arange(1, n)
    nr = n - nl
    for f in features:
        xf = X[idx, f]
        order = np.argsort(xf, kind="stable")
        xs = xf[order]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        cl = np.cumsum(pos[order])[:-1]
        cr = total_pos - cl
        gl = 1.0 - (cl / nl) ** 2 - ((nl - cl) / nl) ** 2
        gr = 1.0 - (cr / nr) ** 2 - ((nr - cr) / nr) ** 2
        gain = parent - (nl * gl + nr * gr) / n
        gain = np.where(valid, gain, -np.inf)
        k = int(np.argmax(gain))  # first maximum = lowest threshold
        if gain[k] > best_gain + _EPS:
            lo, hi = xs[k], xs[k + 1]
            t = lo + (hi - lo) / 2.0
            best_gain, best_f, best_t = float(gain[k]), int(f), float(t if t < hi else lo)
    return best_f, best_t, best_gain


def cart_train(X, y, config: TreeConfig = TreeConfig(), *, max_features: int | None = None,
               rng: np.random.Generator | None = None) -> DecisionTree:
    """Grow a binary CART tree.

    ``max_features`` and ``rng`` are used by the forest to evaluate a random
    subset of features at each node; by default every feature is searched.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty dataset")
    if y.shape != (X.shape[0],):
        raise ValueError("labels do not match the number of rows")
    n, d = X.shape
    tree = DecisionTree(n_features=d)
    imp = np.zeros(d)
    all_features = np.arange(d)

    def grow(idx: np.ndarray, depth: int) -> int:
        node = tree.node_count
        frac = float(np.mean(y[idx] == 1))
        tree.feature.append(-1)
        tree.threshold.append(0.0)
        tree.left.append(-1)
        tree.right.append(-1)
        tree.positive_fraction.append(frac)
        if depth >= config.max_depth or idx.size < config.min_samples_split or frac in (0.0, 1.0):
            return node
        if max_features is not None and max_features < d:
            features = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            features = all_features
        f, t, gain = _best_split(X, y, idx, features)
        if f < 0:
            return node
        imp[f] += idx.size / n * gain
        mask = X[idx, f] <= t
        tree.feature[node] = f
        tree.threshold[node] = t
        tree.left[node] = grow(idx[mask], depth + 1)
        tree.right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(n), 0)
    tree.importances = imp
    return tree


def _check_width(model: DecisionTree, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ValueError(f"model expects {model.n_features} features, got {X.shape[1]}")
    return X


def cart_positive_fraction(model: DecisionTree, X) -> np.ndarray:
    X = _check_width(model, X)
    return np.array([model.positive_fraction[model._leaf_of(x)] for x in X])


def cart_predict(model: DecisionTree, X) -> np.ndarray:
    """Leaf-majority labels; an evenly split leaf predicts +1."""
    return np.where(cart_positive_fraction(model, X) >= 0.5, 1, -1)


def cart_scores(model: DecisionTree, X) -> np.ndarray:
    """Centred leaf purity; ``sign`` of the score agrees with ``cart_predict``."""
    return cart_positive_fraction(model, X) - 0.5


def forest_importance(X, y, config: ForestConfig = ForestConfig()) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least two samples")
    if np.unique(y).size < 2:
        raise DegenerateLabelsError("forest importance needs both classes")
    m = config.resolved_features(d)
    total = np.zeros(d)
    children = np.random.SeedSequence(config.tree.seed).spawn(config.n_trees)
    for seq in children:
        rng = np.random.default_rng(seq)
        rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        tree = cart_train(X[rows], y[rows], config.tree, max_features=m, rng=rng)
        s = tree.importances.sum()
        if s > 0:
            total += tree.importances / s
    s = total.sum()
    return total / s if s > 0 else total
