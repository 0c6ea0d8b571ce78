"""Dense statevector simulator.

Conventions
-----------
* Qubit 0 is the least-significant bit of the amplitude index, so the
  basis state ``|q_{n-1} ... q_1 q_0>`` lives at index ``sum(q_k << k)``.
* For a two-qubit gate applied to ``targets=(a, b)`` the 4x4 matrix is
  written in the local basis ``|bit_a bit_b>``, i.e. local index
  ``2*bit_a + bit_b``. ``CNOT`` with ``targets=(control, target)`` is
  therefore the textbook matrix.
* Rotations are ``R_a(theta) = exp(-i theta/2 * a)`` for ``a`` in X, Y, Z.

Gates are applied over the amplitude array viewed as an ``n``-axis tensor;
no ``2^n x 2^n`` operator is ever formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 24


class CapacityError(ValueError):
    """Requested register is larger than the simulator supports."""


class CircuitError(ValueError):
    """Malformed gate, target list or circuit."""


@dataclass(frozen=True)
class GateMatrix:
    name: str
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise CircuitError(f"gate {self.name!r} has shape {m.shape}, expected 2x2 or 4x4")
        object.__setattr__(self, "matrix", m)

    @property
    def arity(self) -> int:
        return 1 if self.matrix.shape[0] == 2 else 2

    def dagger(self) -> "GateMatrix":
        name = self.name[:-1] if self.name.endswith("†") else self.name + "†"
        return GateMatrix(name, self.matrix.conj().T)

    def is_unitary(self, atol: float = 1e-10) -> bool:
        m = self.matrix
        return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), rtol=0.0, atol=atol))


@dataclass
class StateVector:
    num_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (1 << self.num_qubits,):
            raise CircuitError(
                f"amplitude array of shape {self.amps.shape} does not match {self.num_qubits} qubits"
            )

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amps.copy())

    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


Op = tuple[GateMatrix, tuple[int, ...]]


@dataclass(frozen=True)
class CircuitDescription:
    num_qubits: int
    ops: tuple[Op, ...] = ()

    def __post_init__(self):
        _check_qubit_count(self.num_qubits)
        ops = tuple((gate, tuple(int(t) for t in targets)) for gate, targets in self.ops)
        for gate, targets in ops:
            _check_targets(gate, targets, self.num_qubits)
        object.__setattr__(self, "ops", ops)

    def __len__(self) -> int:
        return len(self.ops)

    def gate_names(self) -> list[str]:
        return [gate.name for gate, _ in self.ops]


def _check_qubit_count(num_qubits: int) -> None:
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise CapacityError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")


def _check_targets(gate: GateMatrix, targets: Sequence[int], num_qubits: int) -> None:
    if len(targets) != gate.arity:
        raise CircuitError(f"gate {gate.name!r} acts on {gate.arity} qubit(s), got targets {tuple(targets)}")
    if len(set(targets)) != len(targets):
        raise CircuitError(f"duplicate targets {tuple(targets)}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise CircuitError(f"target {t} out of range for {num_qubits} qubits")


# -- gate library -----------------------------------------------------------

_SQ2 = 1.0 / np.sqrt(2.0)


def hadamard() -> GateMatrix:
    return GateMatrix("H", np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]]))


def pauli_x() -> GateMatrix:
    return GateMatrix("X", np.array([[0, 1], [1, 0]]))


def rx(theta: float) -> GateMatrix:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return GateMatrix("Rx", np.array([[c, -1j * s], [-1j * s, c]]))


def ry(theta: float) -> GateMatrix:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return GateMatrix("Ry", np.array([[c, -s], [s, c]]))


def rz(theta: float) -> GateMatrix:
    return GateMatrix("Rz", np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]))


def cnot() -> GateMatrix:
    return GateMatrix("CNOT", np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))


def zz(theta: float) -> GateMatrix:
    """``exp(-i theta Z⊗Z)`` as a single diagonal gate."""
    p, m = np.exp(-1j * theta), np.exp(1j * theta)
    return GateMatrix("ZZ", np.diag([p, m, m, p]))


# -- state operations -------------------------------------------------------

def init_zero_state(num_qubits: int) -> StateVector:
    _check_qubit_count(num_qubits)
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def apply_gate(state: StateVector, gate: GateMatrix, targets: Sequence[int]) -> StateVector:
    """Apply ``gate`` to ``targets`` in place and return ``state``."""
    targets = tuple(int(t) for t in targets)
    _check_targets(gate, targets, state.num_qubits)
    _apply_unchecked(state.amps, state.num_qubits, gate.matrix, targets)
    return state


def _apply_unchecked(amps: np.ndarray, n: int, matrix: np.ndarray, targets: tuple[int, ...]) -> None:
    # C-order reshape puts qubit q on axis n-1-q.
    psi = amps.reshape((2,) * n)
    k = len(targets)
    axes = [n - 1 - t for t in targets]
    g = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), axes))
    # tensordot puts the gate's output axes first; restore the original layout.
    psi[...] = np.moveaxis(out, list(range(k)), axes)


def apply_circuit(state: StateVector, circuit: CircuitDescription) -> StateVector:
    if circuit.num_qubits != state.num_qubits:
        raise CircuitError(
            f"circuit acts on {circuit.num_qubits} qubits but state has {state.num_qubits}"
        )
    for gate, targets in circuit.ops:
        _apply_unchecked(state.amps, state.num_qubits, gate.matrix, targets)
    return state


def adjoint_circuit(circuit: CircuitDescription) -> CircuitDescription:
    return CircuitDescription(
        circuit.num_qubits,
        tuple((gate.dagger(), targets) for gate, targets in reversed(circuit.ops)),
    )


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return ``<a|b>``."""
    if a.num_qubits != b.num_qubits:
        raise CircuitError(f"cannot take inner product of {a.num_qubits}- and {b.num_qubits}-qubit states")
    return complex(np.vdot(a.amps, b.amps))


def zero_probability(state: StateVector) -> float:
    return float(abs(state.amps[0]) ** 2)


def sample_counts(state: StateVector, shots: int, seed: int | Iterable[int]) -> dict[int, int]:
    """Measure every qubit ``shots`` times; returns nonzero counts keyed by basis index."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    return {int(k): int(c) for k, c in enumerate(counts) if c}


# -- dense oracle -----------------------------------------------------------

def dense_operator(gate: GateMatrix, targets: Sequence[int], num_qubits: int) -> np.ndarray:
    """Full ``2^n x 2^n`` matrix of a placed gate via Kronecker products.

    Test oracle only; the simulator never calls this.
    """
    targets = tuple(targets)
    _check_targets(gate, targets, num_qubits)
    eye = np.eye(2, dtype=complex)

    def chain(factors: dict[int, np.ndarray]) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        for q in range(num_qubits - 1, -1, -1):
            out = np.kron(out, factors.get(q, eye))
        return out

    if gate.arity == 1:
        return chain({targets[0]: gate.matrix})

    a, b = targets
    full = np.zeros((1 << num_qubits,) * 2, dtype=complex)
    m = gate.matrix
    for ia in range(2):
        for ja in range(2):
            for ib in range(2):
                for jb in range(2):
                    coeff = m[2 * ia + ib, 2 * ja + jb]
                    if coeff == 0:
                        continue
                    ea = np.zeros((2, 2)); ea[ia, ja] = 1
                    eb = np.zeros((2, 2)); eb[ib, jb] = 1
                    full += coeff * chain({a: ea, b: eb})
    return full
