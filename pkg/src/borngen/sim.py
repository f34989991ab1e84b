"""Dense statevector simulation of small qubit circuits.

Convention: qubit 0 is the least-significant bit of the basis index.
All gate applications are pure (they return a new state) and preserve
the norm to double precision.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Gate",
    "StateVector",
    "apply_gate",
    "run_circuit",
    "run_circuit_batch",
    "probabilities",
    "PARAMETERIZED_KINDS",
    "FIXED_KINDS",
]

PARAMETERIZED_KINDS = frozenset({"RY", "RX", "RZZ"})
FIXED_KINDS = frozenset({"CNOT", "H"})
_SINGLE_QUBIT = frozenset({"RY", "RX", "H"})


@dataclass(frozen=True)
class Gate:
    """One gate in a circuit: a kind, target qubits and an optional slot.

    Parameterized gates carry either a trainable parameter slot or a data
    slot (for feature-map rotations), never both.
    """

    kind: str
    targets: tuple[int, ...]
    param_slot: Optional[int] = None
    data_slot: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in PARAMETERIZED_KINDS | FIXED_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = 1 if self.kind in _SINGLE_QUBIT else 2
        if len(self.targets) != arity:
            raise ValueError(f"{self.kind} takes {arity} target(s), got {self.targets}")
        if arity == 2 and self.targets[0] == self.targets[1]:
            raise ValueError(f"{self.kind} targets must be distinct")
        parameterized = self.kind in PARAMETERIZED_KINDS
        n_slots = (self.param_slot is not None) + (self.data_slot is not None)
        if parameterized and n_slots != 1:
            raise ValueError(f"{self.kind} needs exactly one of param_slot/data_slot")
        if not parameterized and n_slots != 0:
            raise ValueError(f"{self.kind} takes no slot")

    @property
    def is_parameterized(self) -> bool:
        return self.kind in PARAMETERIZED_KINDS


@dataclass
class StateVector:
    """Complex amplitudes over the 2**n_qubits computational basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    @classmethod
    def zero_state(cls, n_qubits: int) -> "StateVector":
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


def _rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    raise ValueError(kind)


def _apply_single(amps: np.ndarray, n: int, mat: np.ndarray, qubit: int) -> np.ndarray:
    # batch-aware: amps may be (dim,) or (batch, dim); mat (2,2) or (batch,2,2)
    batched = amps.ndim == 2
    b = amps.shape[0] if batched else 1
    t = amps.reshape((b,) + (2,) * n)
    axis = 1 + (n - 1 - qubit)
    t = np.moveaxis(t, axis, 1)
    rest = t.reshape(b, 2, -1)
    if mat.ndim == 2:
        out = np.einsum("ij,bjr->bir", mat, rest)
    else:
        out = np.einsum("bij,bjr->bir", mat, rest)
    out = np.moveaxis(out.reshape((b,) + (2,) * n), 1, axis)
    out = out.reshape(b, -1)
    return out if batched else out[0]


def _apply_cnot(amps: np.ndarray, control: int, target: int) -> np.ndarray:
    dim = amps.shape[-1]
    idx = np.arange(dim)
    perm = np.where((idx >> control) & 1 == 1, idx ^ (1 << target), idx)
    return amps[..., perm]


def _rzz_phases(dim: int, q0: int, q1: int, angle) -> np.ndarray:
    # exp(-i * angle * Z@Z): eigenvalue +1 when the two bits agree
    idx = np.arange(dim)
    zz = np.where(((idx >> q0) & 1) == ((idx >> q1) & 1), 1.0, -1.0)
    angle = np.asarray(angle)
    if angle.ndim == 0:
        return np.exp(-1j * float(angle) * zz)
    return np.exp(-1j * np.outer(angle, zz))


def apply_gate(state: StateVector, gate: Gate, angle: Optional[float] = None) -> StateVector:
    """Apply one gate to the state, returning a new StateVector."""
    n = state.n_qubits
    for t in gate.targets:
        if not 0 <= t < n:
            raise ValueError(f"target {t} out of range for {n} qubits")
    if gate.is_parameterized and angle is None:
        raise ValueError(f"{gate.kind} requires an angle")
    if not gate.is_parameterized and angle is not None:
        raise ValueError(f"{gate.kind} takes no angle")
    amps = state.amplitudes
    if gate.kind == "H":
        out = _apply_single(amps, n, _H, gate.targets[0])
    elif gate.kind in ("RY", "RX"):
        out = _apply_single(amps, n, _rotation_matrix(gate.kind, angle), gate.targets[0])
    elif gate.kind == "CNOT":
        out = _apply_cnot(amps, gate.targets[0], gate.targets[1])
    else:  # RZZ
        out = _rzz_phases(len(amps), gate.targets[0], gate.targets[1], angle) * amps
    return StateVector(n, out)


def _gather_angle(gate: Gate, theta, data_angles):
    if gate.param_slot is not None:
        return theta[gate.param_slot]
    if gate.data_slot is not None:
        if data_angles is None:
            raise ValueError("circuit has data slots but no data angles were given")
        return data_angles[gate.data_slot]
    return None


def run_circuit(circuit, theta: Sequence[float], data_angles=None) -> StateVector:
    """Run the circuit on |0...0>, returning the final statevector."""
    theta = np.asarray(theta, dtype=float)
    if len(theta) != circuit.n_parameters:
        raise ValueError(
            f"expected {circuit.n_parameters} parameters, got {len(theta)}"
        )
    if circuit.n_data_slots and (
        data_angles is None or len(data_angles) != circuit.n_data_slots
    ):
        raise ValueError(f"expected {circuit.n_data_slots} data angles")
    state = StateVector.zero_state(circuit.n_qubits)
    for gate in circuit.gates:
        state = apply_gate(state, gate, _gather_angle(gate, theta, data_angles))
    return state


def run_circuit_batch(circuit, thetas: np.ndarray, data_angles=None) -> np.ndarray:
    """Run the circuit for a batch of parameter vectors at once.

    Returns a (batch, 2**n_qubits) array of amplitudes. Used to evaluate
    all parameter-shifted circuits of a gradient in one pass.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != circuit.n_parameters:
        raise ValueError(
            f"expected {circuit.n_parameters} parameters, got {thetas.shape[1]}"
        )
    n = circuit.n_qubits
    b = thetas.shape[0]
    dim = 2**n
    amps = np.zeros((b, dim), dtype=complex)
    amps[:, 0] = 1.0
    for gate in circuit.gates:
        if gate.kind == "H":
            amps = _apply_single(amps, n, _H, gate.targets[0])
        elif gate.kind == "CNOT":
            amps = _apply_cnot(amps, gate.targets[0], gate.targets[1])
        elif gate.kind == "RZZ":
            if gate.param_slot is not None:
                angle = thetas[:, gate.param_slot]
            else:
                angle = np.full(b, float(data_angles[gate.data_slot]))
            amps = _rzz_phases(dim, gate.targets[0], gate.targets[1], angle) * amps
        else:  # RY / RX
            if gate.param_slot is not None:
                angle = thetas[:, gate.param_slot]
            else:
                angle = np.full(b, float(data_angles[gate.data_slot]))
            c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
            mats = np.empty((b, 2, 2), dtype=complex)
            if gate.kind == "RY":
                mats[:, 0, 0] = c
                mats[:, 0, 1] = -s
                mats[:, 1, 0] = s
                mats[:, 1, 1] = c
            else:
                mats[:, 0, 0] = c
                mats[:, 0, 1] = -1j * s
                mats[:, 1, 0] = -1j * s
                mats[:, 1, 1] = c
            amps = _apply_single(amps, n, mats, gate.targets[0])
    return amps


def probabilities(state: StateVector, register_bits: Optional[tuple[int, ...]] = None):
    """Born-rule probabilities of the state as a DiscreteDistribution."""
    from .distributions import DiscreteDistribution

    if register_bits is None:
        register_bits = (state.n_qubits,)
    p = np.abs(state.amplitudes) ** 2
    return DiscreteDistribution(p, register_bits)
