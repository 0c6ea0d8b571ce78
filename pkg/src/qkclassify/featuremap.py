"""Entangling feature-map circuits.

Three families are built over ``d`` qubits (one per feature):

``proposed``
    Hadamard layer (first repetition only), a ZZ block per entangler pair at
    angle ``(pi - x_j)(pi - x_k)``, then per qubit ``R_x(rx_angle)`` followed
    by ``R_y(angle_scale * x_j)``.
``iqp``
    Per repetition: Hadamard layer, ``R_z(angle_scale * x_j)`` per qubit,
    then the ZZ blocks.
``heisenberg``
    One ``exp(-i phi (XX + YY + ZZ))`` gate per entangler pair. The all-zero
    state is a triplet eigenstate of every such gate, so by default the
    register is first prepared in the alternating product state
    ``|...0101>`` (X on odd qubits). ``heisenberg_init="zero"`` drops that
    layer.

A ZZ block is ``CNOT . R_z(2 phi) . CNOT`` which equals ``exp(-i phi Z⊗Z)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import sim


class Family(str, Enum):
    PROPOSED = "proposed"
    IQP = "iqp"
    HEISENBERG = "heisenberg"


class Topology(str, Enum):
    LINEAR = "linear"
    FULL = "full"


@dataclass(frozen=True)
class FeatureMapSpec:
    family: Family = Family.PROPOSED
    topology: Topology = Topology.FULL
    reps: int = 2
    rx_angle: float = math.pi / 2
    angle_scale: float = 1.0
    heisenberg_init: str = "neel"

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "topology", Topology(self.topology))
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.heisenberg_init not in ("neel", "zero"):
            raise ValueError(f"heisenberg_init must be 'neel' or 'zero', got {self.heisenberg_init!r}")
        for name in ("rx_angle", "angle_scale"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def name(self) -> str:
        return f"{self.family.value}_{self.topology.value}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        d["topology"] = self.topology.value
        return d


def pair_angle(x_j: float, x_k: float) -> float:
    return (math.pi - x_j) * (math.pi - x_k)


def entangler_pairs(d: int, topology: Topology | str) -> list[tuple[int, int]]:
    topology = Topology(topology)
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if topology is Topology.LINEAR:
        return [(j, j + 1) for j in range(d - 1)]
    return [(j, k) for j in range(d) for k in range(j + 1, d)]


_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def heisenberg_gate(theta: float) -> sim.GateMatrix:
    """``exp(-i theta (XX + YY + ZZ))``.

    ``XX + YY + ZZ = 2 SWAP - I``, and ``SWAP^2 = I``, which gives the closed
    form ``e^{i theta} (cos(2 theta) I - i sin(2 theta) SWAP)``.
    """
    m = np.exp(1j * theta) * (np.cos(2 * theta) * np.eye(4) - 1j * np.sin(2 * theta) * _SWAP)
    return sim.GateMatrix("HEIS", m)


_H = sim.hadamard()
_CX = sim.cnot()
_X = sim.pauli_x()


def _zz_block(ops: list, j: int, k: int, phi: float) -> None:
    ops.append((_CX, (j, k)))
    ops.append((sim.rz(2.0 * phi), (k,)))
    ops.append((_CX, (j, k)))


def build_feature_circuit(spec: FeatureMapSpec, x: Sequence[float]) -> sim.CircuitDescription:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("feature vector must be one-dimensional and nonempty")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector has non-finite entries")
    d = x.size
    if d > sim.MAX_QUBITS:
        raise sim.CapacityError(f"{d} features exceed the {sim.MAX_QUBITS}-qubit capacity")

    pairs = entangler_pairs(d, spec.topology)
    angles = [(j, k, pair_angle(x[j], x[k])) for j, k in pairs]
    ops: list = []

    if spec.family is Family.PROPOSED:
        ops.extend((_H, (q,)) for q in range(d))
        rx_gate = sim.rx(spec.rx_angle)
        for _ in range(spec.reps):
            for j, k, phi in angles:
                _zz_block(ops, j, k, phi)
            for q in range(d):
                ops.append((rx_gate, (q,)))
                ops.append((sim.ry(spec.angle_scale * x[q]), (q,)))
    elif spec.family is Family.IQP:
        for _ in range(spec.reps):
            ops.extend((_H, (q,)) for q in range(d))
            ops.extend((sim.rz(spec.angle_scale * x[q]), (q,)) for q in range(d))
            for j, k, phi in angles:
                _zz_block(ops, j, k, phi)
    else:
        if spec.heisenberg_init == "neel":
            ops.extend((_X, (q,)) for q in range(1, d, 2))
        gates = [(heisenberg_gate(phi), (j, k)) for j, k, phi in angles]
        for _ in range(spec.reps):
            ops.extend(gates)

    return sim.CircuitDescription(d, tuple(ops))
