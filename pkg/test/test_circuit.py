import json
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tools.encoding import to_str
from tools.response import assert_dict_struct
from tools.structure import circuit_document_structure
from weakwire.circuit import (
    CircuitSpec,
    Cut,
    SingleQubitRotation,
    SwapAlpha,
    WireMeasurement,
    apply_gate,
    born_probability,
    evolve_forward,
    evolve_retro,
    forward_amps,
    gate_unitary,
    interior_cut,
    outcome_basis,
    random_circuit,
    retro_amps,
    sqrt_swap_circuit,
    swap_alpha_from_hamiltonian,
    swap_alpha_matrix,
    transition_amplitude,
    with_measurement,
)
from weakwire.errors import CircuitFormatError, DomainError, GateTypeError, WireRangeError
from weakwire.qstate import (
    X_HAT,
    Y_HAT,
    Z_HAT,
    BlochVector,
    StateVector,
    is_unitary,
    product_state,
    random_state,
    reduced_purity,
)

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def three_qubit_circuit(seed: int = 0) -> CircuitSpec:
    """Entangled preparation, a SwapAlpha, a rotation and a second SwapAlpha."""
    rng = np.random.default_rng(seed)
    return CircuitSpec(
        n_qubits=3,
        prep=random_state(3, rng),
        moments=(
            (SwapAlpha(0, 1, 0.7), SingleQubitRotation(2, Y_HAT, 0.4)),
            (SingleQubitRotation(1, X_HAT, 1.1),),
            (SwapAlpha(1, 2, 0.3),),
        ),
        meas=(
            WireMeasurement(Z_HAT, 1),
            WireMeasurement(X_HAT, -1),
            WireMeasurement(Y_HAT, 1),
        ),
    )


def test_gate_unitary_acts_like_apply_gate():
    """The full-size unitary of a gate agrees with the in-place application."""
    rng = np.random.default_rng(4)
    amps = random_state(3, rng).amps
    for g in (SwapAlpha(0, 2, 0.37), SingleQubitRotation(1, Y_HAT, 0.9, phase=0.2)):
        u = gate_unitary(g, 3)
        assert u.shape == (8, 8) and is_unitary(u)
        assert_allclose(u @ amps, apply_gate(amps, g, 3), atol=1e-13)
    full_swap = gate_unitary(SwapAlpha(0, 2, 1.0), 3)
    assert_allclose(full_swap[:, 4], np.eye(8)[1], atol=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 1.0, 1.7, 2.3])
def test_swap_alpha_matches_exchange_exponential(alpha):
    """The closed-form gate equals exp(-i pi alpha sigma.sigma / 4) up to phase."""
    assert_allclose(swap_alpha_matrix(alpha), swap_alpha_from_hamiltonian(alpha), atol=1e-12)
    assert is_unitary(swap_alpha_matrix(alpha))


@pytest.mark.parametrize("a1, a2", [(0.3, 0.45), (0.5, 0.5), (1.7, 0.9), (2.3, 0.05)])
def test_swap_alpha_exponents_add(a1, a2):
    composed = swap_alpha_matrix(a2) @ swap_alpha_matrix(a1)
    assert_allclose(composed, swap_alpha_matrix(a1 + a2), atol=1e-14)


def test_sqrt_swap_partially_entangles_product_input():
    """U(0.5) on x-hat (x) y-hat leaves each wire mixed but not maximally."""
    out = StateVector(2, swap_alpha_matrix(0.5) @ product_state([X_HAT, Y_HAT]).amps)
    for wire in (0, 1):
        assert 0.5 < reduced_purity(out, wire) < 1.0
        assert reduced_purity(out, wire) == pytest.approx(0.875)


def test_full_swap_and_identity():
    """alpha=1 swaps the wires, alpha=2 is the identity."""
    assert_allclose(swap_alpha_matrix(1.0), SWAP, atol=1e-15)
    assert_allclose(swap_alpha_matrix(2.0), np.eye(4), atol=1e-15)


def test_sqrt_swap_born_probabilities():
    """x (x) y through sqrt-SWAP gives 1/4, 0, 1/2, 1/4 for 00, 01, 10, 11."""
    expected = {(1, 1): 0.25, (1, -1): 0.0, (-1, 1): 0.5, (-1, -1): 0.25}
    for (a, b), p in expected.items():
        assert born_probability(sqrt_swap_circuit(a, b)) == pytest.approx(p, abs=1e-12)


def test_outcome_basis_probabilities_sum_to_one():
    """The 2^N product outcomes form a complete set."""
    c = three_qubit_circuit()
    outcomes = outcome_basis(c)
    assert len(outcomes) == 8
    assert sum(born_probability(o) for o in outcomes) == pytest.approx(1.0, abs=1e-12)


def test_with_measurement_keeps_gates():
    """Replacing the measurement leaves preparation and moments untouched."""
    c = sqrt_swap_circuit()
    d = with_measurement(c, (WireMeasurement(X_HAT, 1), WireMeasurement(X_HAT, -1)))
    assert d.moments == c.moments and d.prep == c.prep
    assert d.meas[1].outcome == -1


def test_interior_cut_endpoints_match_moment_cuts():
    """At tau=alpha the interior cut coincides with the cut after the moment."""
    c = three_qubit_circuit()
    end = interior_cut(c, 0, 0.7)
    # moment 0 also holds a rotation on wire 2, applied in full at any interior cut
    rotated = forward_amps(c, Cut(1))
    assert_allclose(forward_amps(c, end), rotated, atol=1e-12)
    assert_allclose(retro_amps(c, end), retro_amps(c, Cut(1)), atol=1e-12)


def test_interior_cut_on_lone_gate_matches_moment_cuts():
    """With nothing else in the moment, both ends of the sweep are ordinary cuts."""
    c = sqrt_swap_circuit()
    assert_allclose(forward_amps(c, interior_cut(c, 0, 0.0)), forward_amps(c, Cut(0)), atol=1e-12)
    assert_allclose(retro_amps(c, interior_cut(c, 0, 0.0)), retro_amps(c, Cut(0)), atol=1e-12)
    assert_allclose(forward_amps(c, interior_cut(c, 0, 0.5)), forward_amps(c, Cut(1)), atol=1e-12)


def test_transition_amplitude_is_cut_independent():
    """<retro|forward> is the same at every cut."""
    c = three_qubit_circuit(4)
    amp = transition_amplitude(c)
    cuts = c.moment_cuts() + [interior_cut(c, 0, 0.3), interior_cut(c, 3, 0.1)]
    for cut in cuts:
        assert np.vdot(evolve_retro(c, cut).amps, evolve_forward(c, cut).amps) == pytest.approx(amp)


def test_interior_cut_errors():
    """Rotations have no interior; tau must lie in [0, alpha]."""
    c = three_qubit_circuit()
    with pytest.raises(GateTypeError):
        interior_cut(c, 1, 0.1)
    with pytest.raises(WireRangeError):
        interior_cut(c, 0, 0.9)
    with pytest.raises(WireRangeError):
        interior_cut(c, 9, 0.1)


def test_circuit_validation():
    """Overlapping gates, bad wires and wrong record lengths are rejected."""
    meas = (WireMeasurement(Z_HAT, 1), WireMeasurement(Z_HAT, 1))
    with pytest.raises(DomainError):
        CircuitSpec(
            2, (X_HAT, Y_HAT), ((SwapAlpha(0, 1, 0.5), SingleQubitRotation(1, Z_HAT, 1)),), meas
        )
    with pytest.raises(WireRangeError):
        CircuitSpec(2, (X_HAT, Y_HAT), ((SingleQubitRotation(2, Z_HAT, 1),),), meas)
    with pytest.raises(DomainError):
        CircuitSpec(2, (X_HAT,), (), meas)
    with pytest.raises(DomainError):
        WireMeasurement(Z_HAT, 0)
    with pytest.raises(DomainError):
        SwapAlpha(1, 1, 0.5)


def test_circuit_document_accepts_both_record_forms():
    product = json.loads(to_str(sqrt_swap_circuit(-1, 1).to_dict()))
    explicit = json.loads(to_str(three_qubit_circuit(2).to_dict()))
    assert isinstance(product["prep"], list) and isinstance(product["meas"], list)
    assert set(explicit["prep"]) == {"state"}
    for document in (product, explicit):
        assert_dict_struct(document, circuit_document_structure)


def test_circuit_document_round_trip():
    """A circuit survives to_dict, JSON text and from_dict."""
    c = three_qubit_circuit(2)
    document = json.loads(to_str(c.to_dict()))
    assert_dict_struct(document, circuit_document_structure)
    d = CircuitSpec.from_dict(document)
    assert d.n_qubits == 3 and len(d.gates) == len(c.gates)
    assert transition_amplitude(d) == pytest.approx(transition_amplitude(c), abs=1e-14)


def test_product_circuit_document():
    """Per-wire records parse into Bloch vectors and measurements."""
    document = {
        "n_qubits": 2,
        "prep": [{"wire": 1, "bloch": [0, 1, 0]}, {"wire": 0, "bloch": [1, 0, 0]}],
        "moments": [[{"type": "swap_alpha", "wires": [0, 1], "alpha": 0.5}]],
        "meas": [
            {"wire": 0, "bloch": [0, 0, 1], "outcome": -1},
            {"wire": 1, "bloch": [0, 0, 1], "outcome": 1},
        ],
    }
    c = CircuitSpec.from_dict(document)
    assert c.prep == (X_HAT, Y_HAT)
    assert born_probability(c) == pytest.approx(0.5)


@pytest.mark.parametrize(
    "document",
    [
        {"prep": [], "meas": []},
        {"n_qubits": 1, "prep": [{"wire": 0, "bloch": [0, 0]}], "meas": []},
        {
            "n_qubits": 1,
            "prep": [{"wire": 0, "bloch": [0, 0, 1]}],
            "moments": [[{"type": "cnot", "wires": [0]}]],
            "meas": [{"wire": 0, "bloch": [0, 0, 1], "outcome": 1}],
        },
        {
            "n_qubits": 1,
            "prep": [{"wire": 0, "bloch": [0, 0, 1]}, {"wire": 0, "bloch": [0, 0, 1]}],
            "meas": [{"wire": 0, "bloch": [0, 0, 1], "outcome": 1}],
        },
        {"n_qubits": 1, "prep": {"state": [[1, 0], [1, 0]]}, "meas": {"state": [[1, 0], [0, 0]]}},
    ],
)
def test_malformed_documents(document):
    """Malformed circuit documents raise CircuitFormatError."""
    with pytest.raises((CircuitFormatError, DomainError)):
        CircuitSpec.from_dict(document)


def test_random_circuit_respects_wires():
    """Gates stay on the requested wires and SwapAlpha exponents stay in range."""
    c = random_circuit(4, 5, np.random.default_rng(11), wires=[2, 3])
    assert c.n_moments == 5
    for _, g in c.gates:
        assert set(g.wires) <= {2, 3}
        if isinstance(g, SwapAlpha):
            assert 0.1 <= g.alpha <= 1.9


def test_rotation_unitary():
    """A pi rotation about z is -i sigma_z; the phase multiplies through."""
    g = SingleQubitRotation(0, Z_HAT, np.pi)
    assert_allclose(g.local_unitary(), np.diag([-1j, 1j]), atol=1e-15)
    h = replace(g, phase=np.pi / 2)
    assert_allclose(h.local_unitary(), np.diag([1, -1]), atol=1e-15)
    with pytest.raises(DomainError):
        SingleQubitRotation(0, BlochVector(1.0, 1.0, 0.0), 0.3)
