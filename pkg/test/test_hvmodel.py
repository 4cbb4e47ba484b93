from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tools.encoding import read_csv
from tools.types import AverageHalf, ConstraintMode
from weakwire import hvmodel
from weakwire.errors import DivergenceError, DomainError, PairingError
from weakwire.hvmodel import (
    OUTCOME_SIGNS,
    HiddenPair,
    SolutionSet,
    average_im_s,
    average_re_s,
    conjugate_pairs,
    constraint_residual,
    constraint_vector,
    count_probability,
    dedupe,
    exact_trajectory,
    integrate_s,
    outcome_label,
    pack,
    propagate_rk4,
    richardson_gap,
    seed_params,
    solve,
    solve_outcomes,
    solve_stable,
    sqrt_swap_problem,
    unpack,
)
from weakwire.weakvalues import sqrt_swap_closed_form

# exact initial pairs of the sqrt-SWAP problem, one per conjugate class
S00 = (np.array([1, -1j, 1]), np.array([1j, 1, 1]))
S11 = (np.array([1, 1j, -1]), np.array([-1j, 1, -1]))
S10_A = (np.array([1, 1, 1j]), np.array([-1, 1, -1j]))
S10_B = (np.array([1, -1, 1j]), np.array([1, 1, -1j]))
TAUS = np.linspace(0.0, 0.5, 51)


@lru_cache(maxsize=None)
def solved(label: str) -> SolutionSet:
    return solve_stable(sqrt_swap_problem(*OUTCOME_SIGNS[label]))


def pair_set(label: str, *pairs) -> SolutionSet:
    hidden = tuple(
        HiddenPair(np.asarray(a, complex), np.asarray(b, complex), 0.0) for a, b in pairs
    )
    return SolutionSet(sqrt_swap_problem(*OUTCOME_SIGNS[label]), hidden)


def with_conjugates(*pairs):
    return [q for a, b in pairs for q in ((a, b), (np.conj(a), np.conj(b)))]


def test_outcome_labels():
    assert [outcome_label(*OUTCOME_SIGNS[k]) for k in OUTCOME_SIGNS] == list(OUTCOME_SIGNS)


def test_pack_layout():
    """Real parts then imaginary parts, wire a before wire b."""
    params = pack(*S00)
    assert_allclose(params, [1, 0, 1, 0, -1, 0, 0, 1, 1, 1, 0, 0])
    s_a, s_b = unpack(params)
    assert_allclose(s_a, S00[0])
    assert_allclose(s_b, S00[1])


def test_integrate_s_grid():
    """The step shrinks so the last sample lands on alpha."""
    traj = integrate_s(*S00, alpha=0.5, step=0.3)
    assert_allclose(traj.taus, [0.0, 0.25, 0.5])
    assert integrate_s(*S00, alpha=0.5).s_a.shape == (501, 3)


def test_integrate_s_keeps_invariants_and_average():
    traj = integrate_s(*S10_A, alpha=0.5)
    assert_allclose(traj.invariants(), np.ones((traj.taus.size, 3)), atol=1e-9)
    total = np.broadcast_to(S10_A[0] + S10_A[1], traj.s_a.shape)
    assert_allclose(traj.s_a + traj.s_b, total, atol=1e-12)


def test_integrate_s_matches_closed_form():
    traj = integrate_s(*S00, alpha=0.5)
    s_a, s_b = exact_trajectory(*S00, traj.taus)
    assert_allclose(traj.s_a, s_a, atol=1e-9)
    assert_allclose(traj.s_b, s_b, atol=1e-9)


def test_integrate_s_zero_length():
    traj = integrate_s(*S11, alpha=0.0)
    assert traj.taus.size == 1
    assert_allclose(traj.s_a[0], S11[0])


def test_integrate_s_diverges():
    with pytest.raises(DivergenceError):
        integrate_s([1e200, 1e200, 0], [0, 1e200, 1e200], alpha=0.5)


def test_propagate_rk4_equals_stepping():
    """The matrix-power shortcut reproduces the stepped integrator."""
    rng = np.random.default_rng(11)
    X = rng.uniform(-1, 1, size=(5, 12))
    s_a, s_b = unpack(X)
    fa, fb = propagate_rk4(s_a, s_b, 0.7, 1e-3)
    for i in range(5):
        traj = integrate_s(s_a[i], s_b[i], 0.7, 1e-3)
        assert_allclose(fa[i], traj.s_a[-1], atol=1e-10)
        assert_allclose(fb[i], traj.s_b[-1], atol=1e-10)


def test_sqrt_swap_solution_follows_weak_vectors():
    """The |00> solution traces the weak-vector trajectory of that outcome."""
    s_a, s_b = exact_trajectory(*S00, TAUS)
    for i, tau in enumerate(TAUS):
        w_a, w_b = sqrt_swap_closed_form("00", tau)
        assert_allclose(s_a[i], w_a.as_array(), atol=1e-12)
        assert_allclose(s_b[i], w_b.as_array(), atol=1e-12)


def test_trajectory_csv():
    header, data = read_csv(integrate_s(*S00, alpha=0.5, step=0.1).to_csv())
    assert header[:3] == ["tau", "re_sax", "im_sax"]
    assert data.shape == (6, 13)


@pytest.mark.parametrize("mode, size", [(ConstraintMode.FULL, 14), (ConstraintMode.RELAXED, 10)])
def test_constraint_vector_length(mode, size):
    p = sqrt_swap_problem(1, 1, mode=mode)
    assert constraint_vector(pack(*S00), p).shape == (size,)
    assert constraint_vector(np.zeros((4, 12)), p).shape == (4, size)


@pytest.mark.parametrize(
    "label, pair",
    [("00", S00), ("11", S11), ("10", S10_A), ("10", S10_B)],
)
@pytest.mark.parametrize("mode", list(ConstraintMode))
def test_exact_solutions_meet_constraints(label, pair, mode):
    p = sqrt_swap_problem(*OUTCOME_SIGNS[label], mode=mode)
    assert constraint_residual(pack(*pair), p) <= 1e-18
    conj = pack(np.conj(pair[0]), np.conj(pair[1]))
    assert constraint_residual(conj, p) <= 1e-18


def test_conjugate_of_random_point_has_same_residual():
    p = sqrt_swap_problem(-1, 1)
    x = seed_params(0, 3)
    h = HiddenPair.from_params(x, 0.0)
    assert constraint_residual(h.conjugate().params, p) == pytest.approx(constraint_residual(x, p))


def test_seed_params_depend_only_on_index():
    assert_allclose(seed_params(5, 7), seed_params(5, 7))
    assert not np.allclose(seed_params(5, 7), seed_params(5, 8))
    assert np.all(np.abs(seed_params(5, 7, scale=2.0)) <= 4.0)


@pytest.mark.parametrize("label, count", [("00", 2), ("10", 4), ("11", 2), ("01", 0)])
def test_solution_counts(label, count):
    s = solved(label)
    assert s.count == count
    assert all(r <= 1e-10 for r in s.residuals)


@pytest.mark.parametrize("label", ["00", "10", "11"])
def test_found_solutions_come_in_conjugate_pairs(label):
    s = solved(label)
    params = np.stack([h.params for h in s.solutions])
    for h in s.solutions:
        assert np.min(np.linalg.norm(params - h.conjugate().params, axis=1)) <= 1e-6
        traj = h.trajectory(s.problem.alpha)
        assert traj.taus[-1] == pytest.approx(s.problem.alpha)
        assert_allclose(traj.invariants(), 1.0, atol=1e-8)
    assert s.candidates >= s.count


def test_richardson_gap_tracks_the_step():
    """Halving a coarse step moves the finals; at the default step it does not."""
    p = sqrt_swap_problem(-1, 1)
    x = pack(*S10_A)
    assert richardson_gap(x, p) <= 1e-9
    assert richardson_gap(x, replace(p, step=0.25)) > 1e-6
    for label in ("00", "10", "11"):
        s = solved(label)
        assert all(richardson_gap(h.params, s.problem) <= 1e-8 for h in s.solutions)


def test_step_halving_check_gates_acceptance(monkeypatch):
    monkeypatch.setattr(hvmodel, "richardson_gap", lambda params, p: 1.0)
    s = solve(sqrt_swap_problem(1, 1), 40)
    assert s.count == 0
    assert s.candidates == 0


def test_counts_reproduce_born_probabilities():
    probs = count_probability({label: solved(label) for label in OUTCOME_SIGNS})
    assert probs == pytest.approx({"00": 0.25, "01": 0.0, "10": 0.5, "11": 0.25})


def test_solved_pairs_are_the_known_solutions():
    expected = np.stack([pack(*q) for q in with_conjugates(S10_A, S10_B)])
    for h in solved("10").solutions:
        assert np.min(np.linalg.norm(expected - h.params, axis=1)) <= 1e-6


def test_count_probability_needs_solutions():
    with pytest.raises(DomainError):
        count_probability({"01": pair_set("01")})


def test_solve_is_deterministic_across_threads():
    p = sqrt_swap_problem(1, 1)
    serial = solve(p, 40, rng_seed=3, threads=1)
    parallel = solve(p, 40, rng_seed=3, threads=3)
    assert serial.count == parallel.count
    for a, b in zip(serial.solutions, parallel.solutions):
        assert_allclose(a.params, b.params, atol=1e-10)


def test_solve_rejects_empty_run():
    with pytest.raises(DomainError):
        solve(sqrt_swap_problem(1, 1), 0)


def test_solve_outcomes_rejects_unknown_label():
    with pytest.raises(DomainError):
        solve_outcomes(outcomes=["02"], stable=False)


def test_dedupe_keeps_lowest_residual():
    a, b = S00
    near = HiddenPair(a + 1e-7, b, 1e-20)
    s = SolutionSet(
        sqrt_swap_problem(1, 1),
        (HiddenPair(a, b, 1e-18), near, HiddenPair(np.conj(a), np.conj(b), 1e-19)),
    )
    out = dedupe(s)
    assert out.count == 2
    assert any(h is near for h in out.solutions)
    with pytest.raises(DomainError):
        dedupe(s, 0.0)


@pytest.mark.parametrize("label", ["00", "11", "10"])
def test_real_average_equals_weak_vectors(label):
    pairs = {"00": [S00], "11": [S11], "10": [S10_A, S10_B]}[label]
    s = pair_set(label, *with_conjugates(*pairs))
    re_a, re_b = average_re_s(s, TAUS)
    for i, tau in enumerate(TAUS):
        w_a, w_b = sqrt_swap_closed_form(label, tau)
        assert_allclose(re_a[i], w_a.real, atol=1e-6)
        assert_allclose(re_b[i], w_b.real, atol=1e-6)


def test_imaginary_average_cancels():
    s = pair_set("10", *with_conjugates(S10_A, S10_B))
    im_a, im_b = average_im_s(s, TAUS)
    assert_allclose(im_a, 0.0, atol=1e-9)
    assert_allclose(im_b, 0.0, atol=1e-9)


@pytest.mark.parametrize("label, pair", [("00", S00), ("11", S11)])
def test_first_half_recovers_imaginary_part(label, pair):
    """The member matching the preparation relation carries Im(w)."""
    conj = (np.conj(pair[0]), np.conj(pair[1]))
    s = pair_set(label, conj, pair)
    (first, _), = conjugate_pairs(s)
    assert_allclose(first.s_a0, pair[0])
    im_a, im_b = average_im_s(s, TAUS, AverageHalf.FIRST_HALF)
    for i, tau in enumerate(TAUS):
        w_a, w_b = sqrt_swap_closed_form(label, tau)
        assert_allclose(im_a[i], w_a.imag, atol=1e-6)
        assert_allclose(im_b[i], w_b.imag, atol=1e-6)


def test_pairing_errors():
    with pytest.raises(PairingError):
        conjugate_pairs(pair_set("00", S00))
    with pytest.raises(PairingError):
        conjugate_pairs(pair_set("10", S10_A, S10_B))


def test_single_solution_averages():
    """A lone solution averages to itself; pairing it is an error."""
    s = pair_set("00", S00)
    re_a, _ = average_re_s(s, [0.0])
    assert_allclose(re_a[0], S00[0].real)
    with pytest.raises(PairingError):
        average_im_s(s, [0.0], AverageHalf.FIRST_HALF)


def test_averages_need_solutions():
    with pytest.raises(DomainError):
        average_re_s(pair_set("01"), TAUS)
