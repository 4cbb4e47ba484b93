"""Dense complex state vectors, operators and Bloch-sphere conversions.

Basis convention: amplitude index bit i, counted from the most significant bit,
is the state of wire i. Wire 0 is therefore the left-most ket label, so
``|10>`` means wire 0 in |1> and wire 1 in |0>.
"""

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from config.weakwire_config import get_config
from weakwire.errors import DomainError, WireRangeError

NORM_TOL = 1e-12
UNIT_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, v: Sequence[float]) -> "BlochVector":
        v = np.asarray(v, dtype=float)
        if v.shape != (3,):
            raise DomainError(f"Bloch vector needs 3 components, got shape {v.shape}")
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def is_unit(self, tol: float = UNIT_TOL) -> bool:
        return abs(self.norm - 1.0) <= tol

    def __neg__(self) -> "BlochVector":
        return BlochVector(-self.x, -self.y, -self.z)

    def to_dict(self):
        return [self.x, self.y, self.z]


X_HAT = BlochVector(1.0, 0.0, 0.0)
Y_HAT = BlochVector(0.0, 1.0, 0.0)
Z_HAT = BlochVector(0.0, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DomainError(f"need at least one qubit, got {self.n_qubits}")
        max_qubits = get_config()["max_qubits"]
        if self.n_qubits > max_qubits:
            raise DomainError(
                f"{self.n_qubits} qubits exceeds the dense-state cap of {max_qubits}"
            )
        amps = _frozen(np.ravel(self.amps))
        if amps.shape != (2**self.n_qubits,):
            raise DomainError(
                f"expected {2 ** self.n_qubits} amplitudes, got {amps.shape[0]}"
            )
        if not np.all(np.isfinite(amps)):
            raise DomainError("state amplitudes must be finite")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps: Sequence[complex], normalize: bool = False) -> "StateVector":
        amps = np.asarray(amps, dtype=complex).ravel()
        n = int(round(np.log2(amps.shape[0]))) if amps.shape[0] > 0 else 0
        if amps.shape[0] == 0 or 2**n != amps.shape[0]:
            raise DomainError(f"length {amps.shape[0]} is not a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise DomainError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(len(bits), amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm - 1.0) <= tol

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amps, other.amps))

    def evolve(self, op: np.ndarray) -> "StateVector":
        return StateVector(self.n_qubits, op @ self.amps)

    def to_dict(self):
        return [[float(a.real), float(a.imag)] for a in self.amps]


def tensor(ops: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product in operand order."""
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops], np.eye(1, dtype=complex))


def _check_wire(wire: int, n_qubits: int) -> None:
    if not 0 <= wire < n_qubits:
        raise WireRangeError(f"wire {wire} out of range for {n_qubits} qubits")


def embed_single(op: np.ndarray, wire: int, n_qubits: int) -> np.ndarray:
    _check_wire(wire, n_qubits)
    ops = [I2] * n_qubits
    ops[wire] = op
    return tensor(ops)


def embed(op: np.ndarray, wires: Sequence[int], n_qubits: int) -> np.ndarray:
    """Embed a k-wire operator acting on `wires` (in that order) into 2^N."""
    wires = list(wires)
    for w in wires:
        _check_wire(w, n_qubits)
    if len(set(wires)) != len(wires):
        raise DomainError(f"wires must be distinct, got {wires}")
    k = len(wires)
    rest = [w for w in range(n_qubits) if w not in wires]
    full = np.kron(np.asarray(op, dtype=complex), np.eye(2 ** (n_qubits - k), dtype=complex))
    perm = list(np.argsort(wires + rest))
    t = full.reshape([2] * (2 * n_qubits))
    t = t.transpose(perm + [n_qubits + p for p in perm])
    return t.reshape(2**n_qubits, 2**n_qubits)


def apply_local(
    amps: np.ndarray, op: np.ndarray, wires: Sequence[int], n_qubits: int
) -> np.ndarray:
    """Apply a k-wire operator to a state without forming the 2^N matrix."""
    wires = list(wires)
    k = len(wires)
    t = np.asarray(amps, dtype=complex).reshape([2] * n_qubits)
    op_t = np.asarray(op, dtype=complex).reshape([2] * (2 * k))
    t = np.tensordot(op_t, t, axes=(list(range(k, 2 * k)), wires))
    t = np.moveaxis(t, list(range(k)), wires)
    return t.reshape(-1)


def bloch_to_state(n: BlochVector) -> StateVector:
    """Pure qubit state with |psi><psi| = (I + n.sigma)/2 and real |0> amplitude."""
    if not n.is_unit():
        raise DomainError(f"Bloch vector {n} is not unit norm")
    x, y, z = n.as_array() / n.norm
    # |0> weight (1 + z)/2, rewritten as (x^2 + y^2)/(2(1 - z)) below the equator
    a = np.sqrt((1.0 + z) / 2.0 if z >= 0 else (x * x + y * y) / (2.0 * (1.0 - z)))
    if a > 0:
        b = complex(x, y) / (2.0 * a)
    else:
        # south pole
        b = complex(1.0, 0.0)
    amps = np.array([a, b], dtype=complex)
    return StateVector(1, amps / np.linalg.norm(amps))


def bloch_of(rho: np.ndarray) -> np.ndarray:
    return np.array([np.trace(rho @ s).real for s in PAULIS])


def projector(psi: StateVector) -> np.ndarray:
    return np.outer(psi.amps, psi.amps.conj())


def state_to_bloch(psi: StateVector) -> BlochVector:
    if psi.n_qubits != 1:
        raise DomainError(f"expected one qubit, got {psi.n_qubits}")
    return BlochVector.from_array(bloch_of(projector(psi)))


def product_state(vectors: Sequence[BlochVector]) -> StateVector:
    amps = reduce(np.kron, [bloch_to_state(v).amps for v in vectors])
    return StateVector(len(vectors), amps)


def reduced_density(psi: StateVector, wire: int) -> np.ndarray:
    _check_wire(wire, psi.n_qubits)
    t = np.moveaxis(psi.amps.reshape([2] * psi.n_qubits), wire, 0).reshape(2, -1)
    return t @ t.conj().T


def reduced_purity(psi: StateVector, wire: int) -> float:
    rho = reduced_density(psi, wire)
    return float(np.trace(rho @ rho).real)


def wire_bloch(psi: StateVector, wire: int) -> np.ndarray:
    return bloch_of(reduced_density(psi, wire))


def is_separable(psi: StateVector, wire: int, tol: float = UNIT_TOL) -> bool:
    return abs(reduced_purity(psi, wire) - 1.0) <= tol


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    amps = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return StateVector(n_qubits, amps / np.linalg.norm(amps))


def random_bloch(rng: np.random.Generator) -> BlochVector:
    v = rng.normal(size=3)
    return BlochVector.from_array(v / np.linalg.norm(v))


def exchange_hamiltonian() -> np.ndarray:
    """sigma.sigma on two qubits, the exchange coupling without its strength J."""
    return sum(np.kron(s, s) for s in PAULIS)


def is_unitary(op: np.ndarray, tol: float = NORM_TOL) -> bool:
    op = np.asarray(op)
    return bool(np.allclose(op @ op.conj().T, np.eye(op.shape[0]), rtol=0, atol=tol))
