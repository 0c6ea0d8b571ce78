"""Fidelity kernels ``K(x, z) = |<0|U(x)^† U(z)|0>|^2``.

Single entries follow the circuit literally: prepare ``U(z)|0>``, apply the
adjoint circuit of ``x`` and read the all-zero probability. Gram and cross
matrices use the equivalent overlap form ``|<psi_x|psi_z>|^2`` with each
feature state simulated once, which is ~n/2 times cheaper.

In sampled mode the all-zero outcome count over ``shots`` measurements is a
binomial draw with success probability ``K``. Matrix entries get their own
seed derived from ``(seed, i, j)`` so results do not depend on evaluation
order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import sim
from .featuremap import FeatureMapSpec, build_feature_circuit

# Domain tags keep gram and cross-gram seed streams disjoint.
_GRAM_TAG = 0
_CROSS_TAG = 1


@dataclass(frozen=True)
class EstimationMode:
    kind: str = "exact"
    shots: int = 8192
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("exact", "sampled"):
            raise ValueError(f"kind must be 'exact' or 'sampled', got {self.kind!r}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")

    @property
    def sampled(self) -> bool:
        return self.kind == "sampled"


EXACT = EstimationMode()


def _as_rows(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("dataset must be a nonempty 2-D array")
    return X


def _binomial_estimate(p: float, shots: int, seed) -> float:
    p = min(max(p, 0.0), 1.0)
    rng = np.random.default_rng(seed)
    return rng.binomial(shots, p) / shots


def feature_state(spec: FeatureMapSpec, x: Sequence[float]) -> sim.StateVector:
    circuit = build_feature_circuit(spec, x)
    return sim.apply_circuit(sim.init_zero_state(circuit.num_qubits), circuit)


def feature_states(spec: FeatureMapSpec, X) -> np.ndarray:
    """Rows are the amplitude vectors of ``U(x)|0>`` for each row of ``X``."""
    X = _as_rows(X)
    return np.stack([feature_state(spec, x).amps for x in X])


def kernel_entry(spec: FeatureMapSpec, x_i, x_j, mode: EstimationMode = EXACT) -> float:
    x_i = np.asarray(x_i, dtype=float)
    x_j = np.asarray(x_j, dtype=float)
    if x_i.shape != x_j.shape:
        raise ValueError(f"dimension mismatch: {x_i.shape} vs {x_j.shape}")
    c_i = build_feature_circuit(spec, x_i)
    c_j = build_feature_circuit(spec, x_j)
    state = sim.apply_circuit(sim.init_zero_state(c_j.num_qubits), c_j)
    sim.apply_circuit(state, sim.adjoint_circuit(c_i))
    p0 = sim.zero_probability(state)
    if mode.sampled:
        return _binomial_estimate(p0, mode.shots, mode.seed)
    return min(p0, 1.0)


def _fidelities(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.clip(np.abs(A.conj() @ B.T) ** 2, 0.0, 1.0)


def gram_matrix(spec: FeatureMapSpec, X, mode: EstimationMode = EXACT) -> np.ndarray:
    X = _as_rows(X)
    psi = feature_states(spec, X)
    full = _fidelities(psi, psi)
    n = full.shape[0]
    iu = np.triu_indices(n)
    upper = full[iu]
    if mode.sampled:
        upper = np.array([
            _binomial_estimate(p, mode.shots, (mode.seed, _GRAM_TAG, int(i), int(j)))
            for p, i, j in zip(upper, *iu)
        ])
    out = np.zeros((n, n))
    out[iu] = upper
    out.T[iu] = upper
    return out


def cross_gram(spec: FeatureMapSpec, X_test, X_train, mode: EstimationMode = EXACT) -> np.ndarray:
    X_test, X_train = _as_rows(X_test), _as_rows(X_train)
    if X_test.shape[1] != X_train.shape[1]:
        raise ValueError(f"dimension mismatch: {X_test.shape[1]} vs {X_train.shape[1]} features")
    out = _fidelities(feature_states(spec, X_test), feature_states(spec, X_train))
    if mode.sampled:
        for (t, i), p in np.ndenumerate(out.copy()):
            out[t, i] = _binomial_estimate(p, mode.shots, (mode.seed, _CROSS_TAG, t, i))
    return out


def psd_floor(m, epsilon: float = 1e-9) -> np.ndarray:
    """Clip negative eigenvalues of a symmetric matrix to zero.

    Returned unchanged when the smallest eigenvalue is already >= -epsilon.
    """
    m = np.asarray(m, dtype=float)
    sym = 0.5 * (m + m.T)
    w, v = np.linalg.eigh(sym)
    if w.min() >= -epsilon:
        return m
    fixed = (v * np.clip(w, 0.0, None)) @ v.T
    return 0.5 * (fixed + fixed.T)


def min_eigenvalue(m) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())


def write_matrix_csv(path: str | Path, m) -> None:
    """Full matrix, row-major, header of column indices, 17 significant digits."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([str(j) for j in range(m.shape[1])])
        for row in m:
            w.writerow([format(v, ".17g") for v in row])


def read_matrix_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    header, body = rows[0], rows[1:]
    m = np.array([[float(v) for v in r] for r in body], dtype=float)
    if m.ndim != 2 or m.shape[1] != len(header):
        raise ValueError(f"{path}: rows do not match header width {len(header)}")
    return m
