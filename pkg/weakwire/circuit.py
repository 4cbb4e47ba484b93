"""Circuit data model and forward/retro evolution.

A circuit is a preparation, an ordered list of moments (each a set of gates on
disjoint wires) and a measurement record. Cuts sit between moments, or inside a
SwapAlpha gate at interaction time tau.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import product
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import expm

from weakwire.errors import CircuitFormatError, DomainError, GateTypeError, WireRangeError
from weakwire.qstate import (
    I2,
    PAULIS,
    BlochVector,
    StateVector,
    Z_HAT,
    X_HAT,
    Y_HAT,
    apply_local,
    embed,
    exchange_hamiltonian,
    product_state,
    random_bloch,
)
from tools.encoding import complex_from_pair


@dataclass(frozen=True)
class SingleQubitRotation:
    wire: int
    axis: BlochVector
    angle: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.axis.is_unit():
            raise DomainError(f"rotation axis {self.axis} is not unit norm")
        if not (np.isfinite(self.angle) and np.isfinite(self.phase)):
            raise DomainError("rotation angle and phase must be finite")

    @property
    def wires(self) -> tuple[int, ...]:
        return (self.wire,)

    def local_unitary(self) -> np.ndarray:
        n = self.axis.as_array() / self.axis.norm
        n_sigma = sum(c * s for c, s in zip(n, PAULIS))
        half = self.angle / 2.0
        return np.exp(1j * self.phase) * (np.cos(half) * I2 - 1j * np.sin(half) * n_sigma)

    def to_dict(self):
        return {
            "type": "rot",
            "wire": self.wire,
            "axis": self.axis.to_dict(),
            "angle": self.angle,
            "phase": self.phase,
        }


@dataclass(frozen=True)
class SwapAlpha:
    wire_a: int
    wire_b: int
    alpha: float

    def __post_init__(self):
        if self.wire_a == self.wire_b:
            raise DomainError(f"SwapAlpha needs two distinct wires, got {self.wire_a} twice")
        if not np.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha}")

    @property
    def wires(self) -> tuple[int, ...]:
        return (self.wire_a, self.wire_b)

    def local_unitary(self, tau: Optional[float] = None) -> np.ndarray:
        return swap_alpha_matrix(self.alpha if tau is None else tau)

    def to_dict(self):
        return {"type": "swap_alpha", "wires": [self.wire_a, self.wire_b], "alpha": self.alpha}


GateOp = Union[SingleQubitRotation, SwapAlpha]


def swap_alpha_matrix(alpha: float) -> np.ndarray:
    """Exchange-interaction unitary on |00>,|01>,|10>,|11>; alpha=1 is a full SWAP."""
    e = np.exp(1j * np.pi * alpha)
    c, s = (1 + e) / 2, (1 - e) / 2
    return np.array(
        [[1, 0, 0, 0], [0, c, s, 0], [0, s, c, 0], [0, 0, 0, 1]], dtype=complex
    )


def swap_alpha_from_hamiltonian(alpha: float) -> np.ndarray:
    """exp(-i (pi/4) alpha sigma.sigma), global phase fixed so the |00> entry is 1."""
    u = expm(-1j * (np.pi / 4.0) * alpha * exchange_hamiltonian())
    return u / u[0, 0]


@dataclass(frozen=True)
class WireMeasurement:
    axis: BlochVector
    outcome: int

    def __post_init__(self):
        if self.outcome not in (1, -1):
            raise DomainError(f"measurement outcome must be +1 or -1, got {self.outcome}")
        if not self.axis.is_unit():
            raise DomainError(f"measurement axis {self.axis} is not unit norm")

    @property
    def direction(self) -> BlochVector:
        """Bloch direction of the observed eigenstate."""
        return self.axis if self.outcome == 1 else -self.axis

    def to_dict(self):
        return {"bloch": self.axis.to_dict(), "outcome": self.outcome}


Preparation = Union[tuple[BlochVector, ...], StateVector]
Measurement = Union[tuple[WireMeasurement, ...], StateVector]


@dataclass(frozen=True)
class Cut:
    moment_index: int
    gate_id: Optional[int] = None
    tau: Optional[float] = None

    @property
    def is_interior(self) -> bool:
        return self.gate_id is not None

    def sort_key(self) -> tuple[int, float]:
        return (self.moment_index, -1.0 if self.tau is None else self.tau)

    def to_dict(self):
        out = {"moment": self.moment_index}
        if self.is_interior:
            out["gate"] = self.gate_id
            out["tau"] = self.tau
        return out


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    prep: Preparation
    moments: tuple[tuple[GateOp, ...], ...] = ()
    meas: Measurement = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "moments", tuple(tuple(m) for m in self.moments))
        if not isinstance(self.prep, StateVector):
            object.__setattr__(self, "prep", tuple(self.prep))
        if not isinstance(self.meas, StateVector):
            object.__setattr__(self, "meas", tuple(self.meas))
        self._validate()

    def _validate(self) -> None:
        n = self.n_qubits
        if n < 1:
            raise DomainError(f"need at least one qubit, got {n}")
        for name, record in (("prep", self.prep), ("meas", self.meas)):
            if isinstance(record, StateVector):
                if record.n_qubits != n:
                    raise DomainError(f"{name} has {record.n_qubits} qubits, circuit has {n}")
                if not record.is_normalized():
                    raise DomainError(f"explicit {name} state is not normalized")
            elif len(record) != n:
                raise DomainError(f"{name} lists {len(record)} wires, circuit has {n}")
        for k, moment in enumerate(self.moments):
            used: set[int] = set()
            for g in moment:
                for w in g.wires:
                    if not 0 <= w < n:
                        raise WireRangeError(f"gate {g} in moment {k} uses wire {w} out of range")
                    if w in used:
                        raise DomainError(f"moment {k} has overlapping gates on wire {w}")
                    used.add(w)

    @cached_property
    def gates(self) -> tuple[tuple[int, GateOp], ...]:
        """(moment_index, gate) in flat gate-id order."""
        return tuple((k, g) for k, moment in enumerate(self.moments) for g in moment)

    def gate(self, gate_id: int) -> GateOp:
        if not 0 <= gate_id < len(self.gates):
            raise WireRangeError(f"gate id {gate_id} out of range")
        return self.gates[gate_id][1]

    def moment_of(self, gate_id: int) -> int:
        self.gate(gate_id)
        return self.gates[gate_id][0]

    @property
    def n_moments(self) -> int:
        return len(self.moments)

    @cached_property
    def initial_state(self) -> StateVector:
        if isinstance(self.prep, StateVector):
            return self.prep
        return product_state(self.prep)

    @cached_property
    def final_state(self) -> StateVector:
        if isinstance(self.meas, StateVector):
            return self.meas
        if not self.meas:
            raise DomainError("circuit has no measurement record")
        return product_state([m.direction for m in self.meas])

    def moment_cuts(self) -> list[Cut]:
        return [Cut(k) for k in range(self.n_moments + 1)]

    def to_dict(self):
        if isinstance(self.prep, StateVector):
            prep = {"state": self.prep.to_dict()}
        else:
            prep = [{"wire": w, "bloch": b.to_dict()} for w, b in enumerate(self.prep)]
        if isinstance(self.meas, StateVector):
            meas = {"state": self.meas.to_dict()}
        else:
            meas = [dict(wire=w, **m.to_dict()) for w, m in enumerate(self.meas)]
        return {
            "n_qubits": self.n_qubits,
            "prep": prep,
            "moments": [[g.to_dict() for g in moment] for moment in self.moments],
            "meas": meas,
        }

    @classmethod
    def from_dict(cls, input: dict) -> "CircuitSpec":
        try:
            n = int(input["n_qubits"])
            prep = _parse_record(input["prep"], n, measurement=False)
            meas = _parse_record(input["meas"], n, measurement=True)
            moments = tuple(
                tuple(_parse_gate(g) for g in moment) for moment in input.get("moments", [])
            )
            return cls(n, prep, moments, meas)
        except CircuitFormatError:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise CircuitFormatError(f"malformed circuit document: {e}")


def _parse_bloch(v) -> BlochVector:
    if not isinstance(v, list) or len(v) != 3:
        raise CircuitFormatError(f"bloch must be [x, y, z], got {v!r}")
    return BlochVector.from_array([float(c) for c in v])


def _parse_record(record, n: int, measurement: bool):
    if isinstance(record, dict) and "state" in record:
        amps = [complex_from_pair(a) for a in record["state"]]
        psi = StateVector.from_amplitudes(amps)
        if abs(psi.norm - 1.0) > 1e-9:
            raise CircuitFormatError("explicit state is not normalized")
        return StateVector(psi.n_qubits, psi.amps / psi.norm)
    if not isinstance(record, list):
        raise CircuitFormatError(f"expected a wire list or {{state: ...}}, got {record!r}")
    by_wire = {}
    for entry in record:
        w = int(entry["wire"])
        if w in by_wire or not 0 <= w < n:
            raise CircuitFormatError(f"wire {w} repeated or out of range")
        axis = _parse_bloch(entry["bloch"])
        by_wire[w] = WireMeasurement(axis, int(entry["outcome"])) if measurement else axis
    if sorted(by_wire) != list(range(n)):
        raise CircuitFormatError(f"record must list every wire 0..{n - 1}")
    return tuple(by_wire[w] for w in range(n))


def _parse_gate(g: dict) -> GateOp:
    kind = g.get("type")
    if kind == "rot":
        return SingleQubitRotation(
            wire=int(g["wire"]),
            axis=_parse_bloch(g["axis"]),
            angle=float(g["angle"]),
            phase=float(g.get("phase", 0.0)),
        )
    if kind == "swap_alpha":
        a, b = g["wires"]
        return SwapAlpha(int(a), int(b), float(g["alpha"]))
    raise CircuitFormatError(f"unknown gate type {kind!r}")


def gate_unitary(g: GateOp, n_qubits: int) -> np.ndarray:
    return embed(g.local_unitary(), g.wires, n_qubits)


def apply_gate(
    amps: np.ndarray, g: GateOp, n_qubits: int, tau: Optional[float] = None
) -> np.ndarray:
    u = g.local_unitary(tau) if isinstance(g, SwapAlpha) else g.local_unitary()
    return apply_local(amps, u, g.wires, n_qubits)


def apply_gate_inverse(
    amps: np.ndarray, g: GateOp, n_qubits: int, tau: Optional[float] = None
) -> np.ndarray:
    u = g.local_unitary(tau) if isinstance(g, SwapAlpha) else g.local_unitary()
    return apply_local(amps, u.conj().T, g.wires, n_qubits)


def interior_cut(c: CircuitSpec, gate_id: int, tau: float) -> Cut:
    g = c.gate(gate_id)
    if not isinstance(g, SwapAlpha):
        raise GateTypeError(f"gate {gate_id} is {type(g).__name__}, not SwapAlpha")
    lo, hi = sorted((0.0, g.alpha))
    if not lo - 1e-12 <= tau <= hi + 1e-12:
        raise WireRangeError(f"tau {tau} outside [0, {g.alpha}] for gate {gate_id}")
    return Cut(c.moment_of(gate_id), gate_id, float(tau))


def _check_cut(c: CircuitSpec, cut: Cut) -> None:
    if cut.is_interior:
        interior_cut(c, cut.gate_id, cut.tau)
        if c.moment_of(cut.gate_id) != cut.moment_index:
            raise WireRangeError(
                f"cut moment {cut.moment_index} does not hold gate {cut.gate_id}"
            )
    elif not 0 <= cut.moment_index <= c.n_moments:
        raise WireRangeError(f"cut before moment {cut.moment_index} outside 0..{c.n_moments}")


def forward_amps(c: CircuitSpec, cut: Cut) -> np.ndarray:
    _check_cut(c, cut)
    n = c.n_qubits
    psi = c.initial_state.amps
    for moment in c.moments[: cut.moment_index]:
        for g in moment:
            psi = apply_gate(psi, g, n)
    if cut.is_interior:
        target = c.gate(cut.gate_id)
        for g in c.moments[cut.moment_index]:
            psi = apply_gate(psi, g, n, cut.tau if g is target else None)
    return psi


def retro_amps(c: CircuitSpec, cut: Cut) -> np.ndarray:
    _check_cut(c, cut)
    n = c.n_qubits
    phi = c.final_state.amps
    first = cut.moment_index + 1 if cut.is_interior else cut.moment_index
    for moment in reversed(c.moments[first:]):
        for g in moment:
            phi = apply_gate_inverse(phi, g, n)
    if cut.is_interior:
        g = c.gate(cut.gate_id)
        phi = apply_gate_inverse(phi, g, n, g.alpha - cut.tau)
    return phi


def evolve_forward(c: CircuitSpec, cut: Cut) -> StateVector:
    return StateVector(c.n_qubits, forward_amps(c, cut))


def evolve_retro(c: CircuitSpec, cut: Cut) -> StateVector:
    return StateVector(c.n_qubits, retro_amps(c, cut))


def transition_amplitude(c: CircuitSpec) -> complex:
    end = Cut(c.n_moments)
    return complex(np.vdot(c.final_state.amps, forward_amps(c, end)))


def born_probability(c: CircuitSpec) -> float:
    return abs(transition_amplitude(c)) ** 2


def with_measurement(c: CircuitSpec, meas: Measurement) -> CircuitSpec:
    return replace(c, meas=meas)


def outcome_basis(c: CircuitSpec) -> list[CircuitSpec]:
    """Every product outcome of the circuit's per-wire measurement axes."""
    if isinstance(c.meas, StateVector):
        raise DomainError("outcome basis needs a per-wire measurement record")
    return [
        with_measurement(
            c, tuple(WireMeasurement(m.axis, s) for m, s in zip(c.meas, signs))
        )
        for signs in product((1, -1), repeat=c.n_qubits)
    ]


def sqrt_swap_circuit(sign_a: int = 1, sign_b: int = 1, alpha: float = 0.5) -> CircuitSpec:
    """x-hat (x) y-hat into SwapAlpha(alpha), both wires measured along z-hat."""
    return CircuitSpec(
        n_qubits=2,
        prep=(X_HAT, Y_HAT),
        moments=((SwapAlpha(0, 1, alpha),),),
        meas=(WireMeasurement(Z_HAT, sign_a), WireMeasurement(Z_HAT, sign_b)),
    )


def random_rotation(wire: int, rng: np.random.Generator) -> SingleQubitRotation:
    return SingleQubitRotation(
        wire, random_bloch(rng), float(rng.uniform(0, 2 * np.pi)), float(rng.uniform(0, 2 * np.pi))
    )


def random_circuit(
    n_qubits: int,
    depth: int,
    rng: np.random.Generator,
    wires: Optional[Sequence[int]] = None,
    swap_probability: float = 0.5,
) -> CircuitSpec:
    """Random rotations and SwapAlpha gates confined to `wires`, random product boundaries."""
    wires = list(range(n_qubits)) if wires is None else list(wires)
    moments = []
    for _ in range(depth):
        free = list(rng.permutation(wires))
        moment: list[GateOp] = []
        while free:
            if len(free) >= 2 and rng.uniform() < swap_probability:
                a, b = int(free.pop()), int(free.pop())
                moment.append(SwapAlpha(a, b, float(rng.uniform(0.1, 1.9))))
            else:
                moment.append(random_rotation(int(free.pop()), rng))
        moments.append(tuple(moment))
    prep = tuple(random_bloch(rng) for _ in range(n_qubits))
    meas = tuple(
        WireMeasurement(random_bloch(rng), int(rng.choice([1, -1]))) for _ in range(n_qubits)
    )
    return CircuitSpec(n_qubits, prep, tuple(moments), meas)
