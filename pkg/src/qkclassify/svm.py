"""Soft-margin SVM trained by SMO on a precomputed Gram matrix.

The solver minimises the dual ``1/2 a^T Q a - sum(a)`` with
``Q_ij = y_i y_j K_ij`` subject to ``0 <= a_i <= C`` and ``y^T a = 0``,
picking working pairs by maximal violation plus second-order gain (the
LIBSVM WSS2 rule). It stops when the maximal KKT violation ``m - M`` drops
below ``tol``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

_TAU = 1e-12


class DegenerateLabelsError(ValueError):
    pass


class SolverPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class SvmTrainConfig:
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 200

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_passes < 1:
            raise ValueError(f"max_passes must be >= 1, got {self.max_passes}")


@dataclass
class SvmModel:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray
    support_indices: np.ndarray
    config: SvmTrainConfig = field(default_factory=SvmTrainConfig)
    iterations: int = 0
    converged: bool = True

    def dual_objective(self, gram) -> float:
        """Dual objective in maximisation form, ``sum(a) - 1/2 a^T Q a``."""
        return dual_objective(self.alphas, self.labels, gram)

    def to_dict(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "bias": float(self.bias),
            "labels": [int(v) for v in self.labels],
            "support_indices": [int(i) for i in self.support_indices],
            "config": asdict(self.config),
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            alphas=np.asarray(d["alphas"], dtype=float),
            bias=float(d["bias"]),
            labels=np.asarray(d["labels"], dtype=int),
            support_indices=np.asarray(d["support_indices"], dtype=int),
            config=SvmTrainConfig(**d["config"]),
            iterations=int(d.get("iterations", 0)),
            converged=bool(d.get("converged", True)),
        )


def dual_objective(alphas, y, gram) -> float:
    a = np.asarray(alphas, dtype=float)
    ay = a * np.asarray(y, dtype=float)
    return float(a.sum() - 0.5 * ay @ np.asarray(gram, dtype=float) @ ay)


def check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    if np.unique(y).size < 2:
        raise DegenerateLabelsError("training labels contain a single class")
    return y.astype(int)


def train_smo(gram, y, config: SvmTrainConfig = SvmTrainConfig()) -> SvmModel:
    K = np.asarray(gram, dtype=float)
    y = check_labels(y)
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"gram shape {K.shape} does not match {n} labels")
    scale = max(1.0, float(np.abs(K).max()))
    if not np.allclose(K, K.T, rtol=0.0, atol=1e-9 * scale):
        raise SolverPreconditionError("gram matrix is not symmetric")
    if np.linalg.eigvalsh(0.5 * (K + K.T)).min() < -1e-9 * scale:
        raise SolverPreconditionError("gram matrix is not PSD; apply psd_floor first")

    # Solve in a canonical orientation (first label +1) so that negating every
    # label yields exactly the same alphas and an exactly negated bias.
    flip = y[0] == -1
    ys = -y if flip else y
    alphas, rho, iters, converged = _solve(K, ys.astype(float), config)
    bias = -rho
    if flip:
        bias = -bias
    support = np.flatnonzero(alphas > 0)
    return SvmModel(alphas, float(bias), y, support, config, iters, converged)


def _solve(K: np.ndarray, y: np.ndarray, config: SvmTrainConfig):
    n = y.size
    C = config.C
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    max_iter = config.max_passes * max(n, 10)
    it = 0
    converged = False

    while it < max_iter:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
        score = -y * G
        if not up.any() or not low.any():
            converged = True
            break
        cand = np.where(up, score, -np.inf)
        i = int(np.argmax(cand))
        m_val = cand[i]
        M_val = np.where(low, score, np.inf).min()
        if m_val - M_val < config.tol:
            converged = True
            break

        # Second-order choice of j among violating members of I_low.
        b = m_val - score
        ok = low & (b > 0)
        a = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, _TAU)
        gain = np.where(ok, -(b * b) / a, np.inf)
        j = int(np.argmin(gain))

        ai_old, aj_old = alpha[i], alpha[j]
        Qi, Qj = Q[i], Q[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Qi[j]
            if quad <= 0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total

        G += Qi * (alpha[i] - ai_old) + Qj * (alpha[j] - aj_old)
        it += 1

    if not converged:
        logger.warning("SMO stopped after %d iterations without reaching tol=%g", it, config.tol)
    return alpha, _rho(alpha, y, G, C), it, converged


def _rho(alpha: np.ndarray, y: np.ndarray, G: np.ndarray, C: float) -> float:
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        return float(yG[free].mean())
    ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
    lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return float((ub + lb) / 2)


def decision_function(model: SvmModel, cross) -> np.ndarray:
    cross = np.atleast_2d(np.asarray(cross, dtype=float))
    if cross.shape[1] != model.alphas.size:
        raise ValueError(
            f"cross-gram has {cross.shape[1]} columns but the model was trained on {model.alphas.size} points"
        )
    return cross @ (model.alphas * model.labels) + model.bias


def predict_scores(model: SvmModel, cross) -> list[tuple[float, int]]:
    scores = decision_function(model, cross)
    return [(float(s), 1 if s >= 0 else -1) for s in scores]


def kkt_violations(model: SvmModel, gram) -> np.ndarray:
    """Per-sample KKT violation of a trained model on its training Gram."""
    f = decision_function(model, gram)
    yf = model.labels * f
    a, C = model.alphas, model.config.C
    v = np.where(a <= 0, np.maximum(0.0, 1 - yf), 0.0)
    v = np.where(a >= C, np.maximum(0.0, yf - 1), v)
    free = (a > 0) & (a < C)
    return np.where(free, np.abs(yf - 1), v)


# -- classical kernels ------------------------------------------------------

@dataclass(frozen=True)
class ClassicalKernelKind:
    kind: str = "rbf"
    gamma: float | str = "scale"
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf", "poly"):
            raise ValueError(f"unknown classical kernel {self.kind!r}")
        if self.kind == "rbf" and self.gamma != "scale" and not float(self.gamma) > 0:
            raise ValueError("gamma must be > 0")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")

    def resolve(self, X) -> "ClassicalKernelKind":
        """Materialise ``gamma='scale'`` as ``1 / (d * var(X))``."""
        if self.kind != "rbf" or self.gamma != "scale":
            return self
        X = np.asarray(X, dtype=float)
        var = X.var()
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        return ClassicalKernelKind("rbf", float(gamma), self.degree, self.coef0)


def classical_cross(A, B, kind: ClassicalKernelKind) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.size == 0 or B.size == 0:
        raise ValueError("empty dataset")
    if kind.kind == "linear":
        return A @ B.T
    if kind.kind == "poly":
        return (A @ B.T + kind.coef0) ** kind.degree
    if kind.gamma == "scale":
        raise ValueError("resolve gamma='scale' against the training data first")
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-float(kind.gamma) * np.maximum(sq, 0.0))


def classical_gram(X, kind: ClassicalKernelKind) -> np.ndarray:
    kind = kind.resolve(X)
    K = classical_cross(X, X, kind)
    return 0.5 * (K + K.T)
