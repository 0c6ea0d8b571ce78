"""LASSO coordinate descent, recursive feature elimination, selection report.

The LASSO objective is ``sum_i (y_i - x_i . w)^2 + lam * sum_j |w_j|`` with
no 1/2 on the squared loss and no intercept. Each coordinate update is the
exact minimiser along that axis::

    w_j = S(2 x_j . r_j, lam) / (2 ||x_j||^2)

where ``r_j`` is the residual without feature ``j`` and ``S`` is soft
thresholding. Coordinate descent is invariant to column rescaling under this
objective, so columns are used as given.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .trees import ForestConfig, forest_importance

Estimator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LassoConfig:
    lam: float = 1.0
    max_iter: int = 10_000
    tol: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("max_iter must be >= 1 and tol > 0")


@dataclass
class LassoResult:
    weights: np.ndarray
    iterations: int
    converged: bool
    objective_history: list[float] = field(default_factory=list)


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_objective(X, y, w, lam) -> float:
    r = np.asarray(y, dtype=float) - np.asarray(X, dtype=float) @ w
    return float(r @ r + lam * np.abs(w).sum())


def lasso_fit(X, y, config: LassoConfig = LassoConfig()) -> LassoResult:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("LASSO inputs must be finite")
    n, d = X.shape
    if y.shape != (n,):
        raise ValueError("labels do not match the number of rows")
    col_sq = (X * X).sum(axis=0)
    w = np.zeros(d)
    r = y.copy()
    lam = config.lam
    history = [lasso_objective(X, y, w, lam)]
    if d and lam >= 2.0 * np.abs(X.T @ y).max():
        # soft-threshold kill condition: zero is optimal, skip the sweeps
        return LassoResult(w, 0, True, history)
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        max_change = 0.0
        for j in range(d):
            if col_sq[j] == 0.0:
                continue
            old = w[j]
            rho = 2.0 * (X[:, j] @ r + col_sq[j] * old)
            new = soft_threshold(rho, lam) / (2.0 * col_sq[j])
            if new != old:
                r -= X[:, j] * (new - old)
                w[j] = new
                max_change = max(max_change, abs(new - old))
        history.append(lasso_objective(X, y, w, lam))
        if max_change <= config.tol:
            converged = True
            break
    return LassoResult(w, it, converged, history)


def lasso_path(X, y, lambdas: Sequence[float], config: LassoConfig = LassoConfig()) -> np.ndarray:
    """Weights for each lambda; rows follow ``lambdas``."""
    return np.array([
        lasso_fit(X, y, LassoConfig(float(lam), config.max_iter, config.tol)).weights for lam in lambdas
    ])


def subgradient_residual(X, y, w, lam) -> np.ndarray:
    """Per-coordinate distance from the optimality conditions (0 at a minimiser)."""
    X = np.asarray(X, dtype=float)
    g = 2.0 * X.T @ (np.asarray(y, dtype=float) - X @ w)
    return np.where(w != 0, np.abs(g - lam * np.sign(w)), np.maximum(np.abs(g) - lam, 0.0))


def rfe_rank(X, y, estimator: Estimator, step: int = 1, n_select: int = 1) -> np.ndarray:
    """Recursive elimination ranks; survivors get rank 1.

    Each round refits ``estimator(X_sub, y)`` on the remaining columns (kept
    in ascending original order) and drops the ``step`` least important,
    ties dropped lowest index first. Features removed in the last round get
    rank 2, the round before rank 3, and so on. A step that would remove all
    remaining candidates is shortened so ``n_select`` features survive.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if d < 1:
        raise ValueError("need at least one feature")
    if step < 1:
        raise ValueError("step must be >= 1")
    n_select = min(max(1, n_select), d)
    remaining = list(range(d))
    rounds: list[list[int]] = []
    while len(remaining) > n_select:
        imp = np.asarray(estimator(X[:, remaining], y), dtype=float)
        if imp.shape != (len(remaining),):
            raise ValueError("estimator returned importances of the wrong length")
        k = min(step, len(remaining) - n_select)
        drop = set(int(i) for i in np.argsort(imp, kind="stable")[:k])
        rounds.append([f for i, f in enumerate(remaining) if i in drop])
        remaining = [f for i, f in enumerate(remaining) if i not in drop]
    ranks = np.ones(d, dtype=int)
    for r, dropped in enumerate(reversed(rounds), start=2):
        ranks[dropped] = r
    return ranks


def forest_estimator(config: ForestConfig = ForestConfig()) -> Estimator:
    def estimate(X, y):
        return forest_importance(X, y, config)

    return estimate


@dataclass
class SelectionReport:
    names: list[str]
    rfe_rank: np.ndarray
    rfe_mask: np.ndarray
    lasso_coeff: np.ndarray
    lasso_lambda: float
    lasso_path: dict[str, list[float]] = field(default_factory=dict)

    @property
    def preference(self) -> list[int]:
        """Column indices sorted by (rfe_rank, -|coeff|, index)."""
        return sorted(
            range(len(self.names)),
            key=lambda j: (int(self.rfe_rank[j]), -abs(float(self.lasso_coeff[j])), j),
        )

    def to_dict(self) -> dict:
        return {
            "features": [
                {"name": n, "rfe_mask": int(m), "rfe_rank": int(r), "lasso_coeff": float(c)}
                for n, m, r, c in zip(self.names, self.rfe_mask, self.rfe_rank, self.lasso_coeff)
            ],
            "lasso_lambda": self.lasso_lambda,
            "lasso_path": self.lasso_path,
            "preference": [self.names[j] for j in self.preference],
        }


def select_features(report: SelectionReport, k: int) -> list[int]:
    d = len(report.names)
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    return report.preference[:k]


def build_selection_report(X, y, names: Sequence[str], *, lasso: LassoConfig = LassoConfig(),
                           forest: ForestConfig = ForestConfig(), step: int = 1,
                           n_keep: int | None = None, lambda_grid: Sequence[float] = ()) -> SelectionReport:
    """RFE (random-forest importances) plus LASSO coefficients for every column.

    RFE is run to a single survivor so ranks order every feature; ``rfe_mask``
    marks the ``n_keep`` best ranked (default half the features, at least one).
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    if len(names) != d:
        raise ValueError("names do not match the number of columns")
    ranks = rfe_rank(X, y, forest_estimator(forest), step=step, n_select=1)
    n_keep = max(1, d // 2) if n_keep is None else min(max(1, n_keep), d)
    mask = (ranks <= np.sort(ranks)[n_keep - 1]).astype(int)
    coeff = lasso_fit(X, y, lasso).weights
    path = {}
    if lambda_grid:
        weights = lasso_path(X, y, lambda_grid, lasso)
        path = {format(lam, ".17g"): [float(v) for v in row] for lam, row in zip(lambda_grid, weights)}
    return SelectionReport(list(names), ranks, mask, coeff, lasso.lam, path)


def write_selection_csv(path: str | Path, report: SelectionReport) -> None:
    """``selected_k`` is the smallest k whose top-k selection includes the feature."""
    position = {j: p + 1 for p, j in enumerate(report.preference)}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "rfe_mask", "rfe_rank", "lasso_coeff", "selected_k"])
        for j, name in enumerate(report.names):
            w.writerow([name, int(report.rfe_mask[j]), int(report.rfe_rank[j]),
                        format(float(report.lasso_coeff[j]), ".17g"), position[j]])


def read_selection_csv(path: str | Path) -> SelectionReport:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return SelectionReport(
        names=[r["feature"] for r in rows],
        rfe_rank=np.array([int(r["rfe_rank"]) for r in rows]),
        rfe_mask=np.array([int(r["rfe_mask"]) for r in rows]),
        lasso_coeff=np.array([float(r["lasso_coeff"]) for r in rows]),
        lasso_lambda=float("nan"),
    )
