"""Confusion matrices, the metric suite, ROC/AUC and stratified k-fold CV.

The positive class is label ``+1``. Metrics whose denominator is zero are
reported as ``None`` (undefined) rather than 0 and are left out of fold
aggregates; the number of folds where each metric was undefined is kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import numpy as np

METRIC_NAMES = (
    "accuracy", "precision_pos", "precision_neg", "recall_pos", "recall_neg",
    "f1_pos", "tpr", "fpr", "auc",
)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class MetricsReport:
    accuracy: float | None = None
    precision_pos: float | None = None
    precision_neg: float | None = None
    recall_pos: float | None = None
    recall_neg: float | None = None
    f1_pos: float | None = None
    tpr: float | None = None
    fpr: float | None = None
    auc: float | None = None

    def as_dict(self) -> dict[str, float | None]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def undefined(self) -> list[str]:
        return [k for k, v in self.as_dict().items() if v is None]


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    for arr in (t, p):
        if not np.all(np.isin(arr, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == -1) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == -1))),
        tn=int(np.sum((t == -1) & (p == -1))),
    )


def metrics_from_confusion(cm: ConfusionMatrix) -> MetricsReport:
    prec = _ratio(cm.tp, cm.tp + cm.fp)
    rec = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = None
    if prec is not None and rec is not None and prec + rec > 0:
        f1 = 2 * prec * rec / (prec + rec)
    return MetricsReport(
        accuracy=_ratio(cm.tp + cm.tn, cm.total),
        precision_pos=prec,
        precision_neg=_ratio(cm.tn, cm.tn + cm.fn),
        recall_pos=rec,
        recall_neg=_ratio(cm.tn, cm.tn + cm.fp),
        f1_pos=f1,
        tpr=rec,
        fpr=_ratio(cm.fp, cm.tn + cm.fp),
    )


def confusion_and_metrics(y_true, y_pred, scores=None) -> tuple[ConfusionMatrix, MetricsReport]:
    """Confusion counts and metrics; AUC is filled in when scores are given
    and both classes are present."""
    cm = confusion(y_true, y_pred)
    report = metrics_from_confusion(cm)
    if scores is not None and len(set(np.asarray(y_true).tolist())) == 2:
        report.auc = roc_auc(scores, y_true)[1]
    return cm, report


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def roc_auc(scores, y_true) -> tuple[RocCurve, float]:
    """ROC from a descending sweep over distinct scores, AUC by trapezoids.

    A sample is called positive when ``score >= threshold``. The first point
    is ``(0, 0)`` at threshold ``+inf``. Tied scores move both rates together,
    which makes the trapezoid area equal the Mann-Whitney statistic with ties
    counted one half.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(y_true)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == -1))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(y == 1)[last_of_group]
    fp = np.cumsum(y == -1)[last_of_group]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[last_of_group]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(fpr, tpr, thresholds), auc


def mann_whitney_auc(scores, y_true) -> float:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(y_true)
    pos, neg = s[y == 1], s[y == -1]
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


@dataclass
class FoldSplit:
    k: int
    seed: int
    folds: list[tuple[np.ndarray, np.ndarray]]

    def __iter__(self):
        return iter(self.folds)

    def __len__(self) -> int:
        return len(self.folds)


def stratified_folds(y, k: int, seed: int = 0) -> FoldSplit:
    """Shuffle each class with ``seed`` and deal its members round-robin.

    The dealing position carries over from one class to the next (classes
    in ascending label order) so fold sizes differ by at most one.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() < k:
        raise ValueError(f"class {classes[counts.argmin()]} has {counts.min()} members, fewer than k={k}")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=int)
    offset = 0
    for c in classes:
        members = np.flatnonzero(y == c)
        rng.shuffle(members)
        assignment[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    folds = []
    for f in range(k):
        test = np.flatnonzero(assignment == f)
        train = np.flatnonzero(assignment != f)
        folds.append((train, test))
    return FoldSplit(k, seed, folds)


def stratified_holdout(y, test_fraction: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split putting ``round(test_fraction * n_c)`` of each
    class in the test set (at least one, never all)."""
    y = np.asarray(y)
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test = []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        rng.shuffle(members)
        n_test = min(max(1, int(round(test_fraction * members.size))), members.size - 1)
        test.extend(members[:n_test].tolist())
    test_idx = np.sort(np.array(test, dtype=int))
    train_idx = np.setdiff1d(np.arange(y.size), test_idx)
    return train_idx, test_idx


# A fold builder receives train and test indices and returns test-set scores;
# the predicted class is sign(score) with sign(0) = +1.
FoldBuilder = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class FoldResult:
    fold: int
    confusion: ConfusionMatrix
    metrics: MetricsReport
    y_true: np.ndarray
    scores: np.ndarray
    test_indices: np.ndarray


@dataclass
class CvResult:
    folds: list[FoldResult]
    mean: dict[str, float | None] = field(default_factory=dict)
    std: dict[str, float | None] = field(default_factory=dict)
    undefined_folds: dict[str, int] = field(default_factory=dict)


def predict_from_scores(scores) -> np.ndarray:
    return np.where(np.asarray(scores) >= 0, 1, -1)


def evaluate_scores(y_true, scores) -> tuple[ConfusionMatrix, MetricsReport]:
    return confusion_and_metrics(y_true, predict_from_scores(scores), scores)


def aggregate(reports: Sequence[MetricsReport]) -> tuple[dict, dict, dict]:
    """Mean and sample standard deviation per metric over defined values.

    Sums use ``math.fsum`` so the result does not depend on fold order.
    """
    mean, std, undefined = {}, {}, {}
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        undefined[name] = len(reports) - len(vals)
        if not vals:
            mean[name] = std[name] = None
            continue
        m = math.fsum(vals) / len(vals)
        mean[name] = m
        std[name] = math.sqrt(math.fsum((v - m) ** 2 for v in vals) / (len(vals) - 1)) if len(vals) > 1 else None
    return mean, std, undefined


def cross_validate(builder: FoldBuilder, y, folds: FoldSplit) -> CvResult:
    y = np.asarray(y)
    results = []
    for f, (train, test) in enumerate(folds):
        scores = np.asarray(builder(train, test), dtype=float)
        if scores.shape != test.shape:
            raise ValueError(f"fold {f}: builder returned {scores.shape} scores for {test.size} test points")
        cm, rep = evaluate_scores(y[test], scores)
        results.append(FoldResult(f, cm, rep, y[test], scores, test))
    mean, std, undefined = aggregate([r.metrics for r in results])
    return CvResult(results, mean, std, undefined)
