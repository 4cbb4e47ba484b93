"""Post-selected local weak values.

W[A] at a cut is <retro|A|forward> / <f|U|i>, where the forward state has been
evolved from the preparation up to the cut and the retro state has been evolved
backwards from the measured state down to the cut. A weak-value vector stacks
W[sigma_x], W[sigma_y], W[sigma_z] for one wire.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from config.weakwire_config import get_config, logger
from tools.encoding import write_csv
from weakwire.circuit import (
    CircuitSpec,
    Cut,
    SwapAlpha,
    apply_gate,
    apply_gate_inverse,
    forward_amps,
    outcome_basis,
    retro_amps,
    transition_amplitude,
    born_probability,
)
from weakwire.errors import DomainError, ForbiddenOutcomeError, GateTypeError, WireRangeError
from weakwire.qstate import PAULIS, BlochVector, StateVector, apply_local, is_separable


@dataclass(frozen=True)
class WeakVector:
    wx: complex
    wy: complex
    wz: complex

    @classmethod
    def from_array(cls, v: Sequence[complex]) -> "WeakVector":
        v = np.asarray(v, dtype=complex)
        return cls(complex(v[0]), complex(v[1]), complex(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.wx, self.wy, self.wz], dtype=complex)

    @property
    def real(self) -> np.ndarray:
        return self.as_array().real

    @property
    def imag(self) -> np.ndarray:
        return self.as_array().imag

    def dot(self, other: "WeakVector") -> complex:
        return hyperbolic_dot(self, other)

    def to_dict(self):
        return [[float(c.real), float(c.imag)] for c in (self.wx, self.wy, self.wz)]


def hyperbolic_dot(u: WeakVector, v: WeakVector) -> complex:
    """Unconjugated complex dot product."""
    return complex(np.sum(u.as_array() * v.as_array()))


def _amplitude(c: CircuitSpec, amp_eps: Optional[float] = None) -> complex:
    amp_eps = get_config()["amp_eps"] if amp_eps is None else amp_eps
    amp = transition_amplitude(c)
    if abs(amp) <= amp_eps:
        raise ForbiddenOutcomeError(f"zero transition amplitude (|<f|U|i>| = {abs(amp):.3e})")
    return amp


def _wire_vector(phi: np.ndarray, psi: np.ndarray, wire: int, n: int, amp: complex) -> np.ndarray:
    return np.array(
        [np.vdot(phi, apply_local(psi, s, [wire], n)) / amp for s in PAULIS], dtype=complex
    )


def weak_value(c: CircuitSpec, cut: Cut, A: np.ndarray) -> complex:
    amp = _amplitude(c)
    psi = forward_amps(c, cut)
    phi = retro_amps(c, cut)
    return complex(np.vdot(phi, np.asarray(A) @ psi) / amp)


def weak_vector(c: CircuitSpec, cut: Cut, wire: int) -> WeakVector:
    if not 0 <= wire < c.n_qubits:
        raise WireRangeError(f"wire {wire} out of range for {c.n_qubits} qubits")
    amp = _amplitude(c)
    return WeakVector.from_array(
        _wire_vector(retro_amps(c, cut), forward_amps(c, cut), wire, c.n_qubits, amp)
    )


def weak_vectors(c: CircuitSpec, cut: Cut) -> list[WeakVector]:
    """Weak vectors of every wire at one cut."""
    amp = _amplitude(c)
    psi, phi = forward_amps(c, cut), retro_amps(c, cut)
    return [
        WeakVector.from_array(_wire_vector(phi, psi, w, c.n_qubits, amp))
        for w in range(c.n_qubits)
    ]


@dataclass(frozen=True, eq=False)
class SweepSeries:
    gate_id: int
    tau_grid: np.ndarray
    w_a: np.ndarray
    w_b: np.ndarray
    separable: np.ndarray

    def __post_init__(self):
        if len(self.tau_grid) != len(self.w_a) or len(self.w_a) != len(self.w_b):
            raise DomainError("sweep grid and weak-vector series lengths differ")
        if len(self.tau_grid) > 1 and not np.all(np.diff(self.tau_grid) > 0):
            raise DomainError("sweep grid must be strictly ascending")

    def rows(self):
        return series_rows(self.tau_grid, self.w_a, self.w_b)

    def to_csv(self, symbol: str = "w") -> str:
        return write_csv(series_header(symbol), self.rows())


def series_header(symbol: str = "w") -> list[str]:
    header = ["tau"]
    for q in ("a", "b"):
        for comp in ("x", "y", "z"):
            header += [f"re_{symbol}{q}{comp}", f"im_{symbol}{q}{comp}"]
    return header


def series_rows(taus, a, b):
    """One row per tau: tau then re/im of each component of a, then of b."""
    for tau, va, vb in zip(taus, a, b):
        row = [tau]
        for v in (va, vb):
            for comp in v:
                row.extend([comp.real, comp.imag])
        yield row


def swap_sweep(c: CircuitSpec, gate_id: int, tau_grid: Sequence[float]) -> SweepSeries:
    g = c.gate(gate_id)
    if not isinstance(g, SwapAlpha):
        raise GateTypeError(f"gate {gate_id} is {type(g).__name__}, not SwapAlpha")
    tau_grid = np.asarray(tau_grid, dtype=float)
    lo, hi = sorted((0.0, g.alpha))
    if tau_grid.size and (tau_grid.min() < lo - 1e-12 or tau_grid.max() > hi + 1e-12):
        raise DomainError(f"tau grid leaves [0, {g.alpha}]")
    amp = _amplitude(c)
    n = c.n_qubits
    k = c.moment_of(gate_id)
    # states at the gate's input and output, with same-moment gates already applied
    psi_in = forward_amps(c, Cut(k))
    for other in c.moments[k]:
        if other is not g:
            psi_in = apply_gate(psi_in, other, n)
    phi_out = retro_amps(c, Cut(k + 1))
    w_a = np.empty((tau_grid.size, 3), dtype=complex)
    w_b = np.empty((tau_grid.size, 3), dtype=complex)
    separable = np.empty(tau_grid.size, dtype=bool)
    for i, tau in enumerate(tau_grid):
        psi = apply_gate(psi_in, g, n, tau)
        phi = apply_gate_inverse(phi_out, g, n, g.alpha - tau)
        w_a[i] = _wire_vector(phi, psi, g.wire_a, n, amp)
        w_b[i] = _wire_vector(phi, psi, g.wire_b, n, amp)
        fwd, back = StateVector(n, psi), StateVector(n, phi)
        separable[i] = all(is_separable(s, w) for s in (fwd, back) for w in g.wires)
    logger.debug("swept gate %d over %d points", gate_id, tau_grid.size)
    return SweepSeries(gate_id, tau_grid, w_a, w_b, separable)


def single_qubit_closed_form(theta0: float, outcome: int) -> WeakVector:
    """Prepared along z-hat, measured along (sin t, 0, cos t) with sign `outcome`."""
    half = theta0 / 2.0
    if outcome == 1:
        if abs(np.cos(half)) < 1e-12:
            raise DomainError(f"tan(theta0/2) undefined at theta0={theta0}")
        t = np.tan(half)
        return WeakVector(complex(t), complex(1j * t), 1.0 + 0j)
    if outcome == -1:
        if abs(np.sin(half)) < 1e-12:
            raise DomainError(f"cot(theta0/2) undefined at theta0={theta0}")
        t = 1.0 / np.tan(half)
        return WeakVector(complex(-t), complex(-1j * t), 1.0 + 0j)
    raise DomainError(f"outcome must be +1 or -1, got {outcome}")


def sqrt_swap_closed_form(outcome: str, tau: float) -> tuple[WeakVector, WeakVector]:
    """Exact (w_a, w_b) inside the sqrt-SWAP gate for x-hat (x) y-hat input."""
    if outcome == "01":
        raise ForbiddenOutcomeError("zero transition amplitude for outcome |01>")
    if not -1e-12 <= tau <= 0.5 + 1e-12:
        raise DomainError(f"tau {tau} outside [0, 0.5]")
    e = np.exp(1j * np.pi * tau)
    if outcome == "00":
        w_a = [1 + 1j + (1 - 1j) * e, 1 - 1j - (1 + 1j) * e, 2]
        w_b = [1 + 1j - (1 - 1j) * e, 1 - 1j + (1 + 1j) * e, 2]
    elif outcome == "10":
        em = np.exp(-1j * np.pi * tau)
        sin = np.sin(np.pi * tau)
        w_a = [1 + em, 1 - em, -2 * sin]
        w_b = [1 - em, 1 + em, 2 * sin]
    elif outcome == "11":
        w_a = [1 - 1j + (1 + 1j) * e, 1 + 1j - (1 - 1j) * e, -2]
        w_b = [1 - 1j - (1 + 1j) * e, 1 + 1j + (1 - 1j) * e, -2]
    else:
        raise DomainError(f"unknown outcome {outcome!r}")
    return (
        WeakVector.from_array(np.asarray(w_a, dtype=complex) / 2),
        WeakVector.from_array(np.asarray(w_b, dtype=complex) / 2),
    )


appendix_b_closed_form = sqrt_swap_closed_form


def single_qubit_probability_rule(ws: Sequence[WeakVector]) -> np.ndarray:
    """P_k proportional to 1/|Re(w_k)|^2, normalized."""
    if not ws:
        raise DomainError("need at least one weak vector")
    norms = np.array([np.dot(w.real, w.real) for w in ws])
    if np.any(norms == 0):
        raise DomainError("weak vector with zero real part has no probability weight")
    weights = 1.0 / norms
    return weights / weights.sum()


def _cross_matrix(n: np.ndarray) -> np.ndarray:
    x, y, z = n
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=complex)


def weak_vector_from_boundaries(i_hat: BlochVector, f_hat: BlochVector) -> WeakVector:
    """Constant weak vector of an idle qubit, from its boundary directions alone.

    Solves w = i + i(i x w) together with w = f + i(w x f).
    """
    i_vec, f_vec = i_hat.as_array(), f_hat.as_array()
    eye = np.eye(3, dtype=complex)
    A = np.vstack([eye - 1j * _cross_matrix(i_vec), eye + 1j * _cross_matrix(f_vec)])
    b = np.concatenate([i_vec, f_vec]).astype(complex)
    w, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(A @ w - b) > 1e-9:
        raise ForbiddenOutcomeError(f"no weak vector joins {i_hat} to {f_hat}")
    return WeakVector.from_array(w)


def expectation_average(c: CircuitSpec, cut: Cut, wire: int) -> np.ndarray:
    """Born-weighted mean of Re(w) over every product outcome of the measurement axes."""
    total = np.zeros(3)
    for outcome in outcome_basis(c):
        p = born_probability(outcome)
        if p <= get_config()["amp_eps"] ** 2:
            continue
        total += p * weak_vector(outcome, cut, wire).real
    return total


@dataclass(frozen=True)
class SinusoidFit:
    offset: float
    cos_amplitude: float
    sin_amplitude: float
    omega: float
    max_residual: float

    def to_dict(self):
        return {
            "offset": self.offset,
            "cos_amplitude": self.cos_amplitude,
            "sin_amplitude": self.sin_amplitude,
            "omega": self.omega,
            "max_residual": self.max_residual,
        }


def _sinusoid(tau, offset, a, b, omega):
    return offset + a * np.cos(omega * tau) + b * np.sin(omega * tau)


def fit_sinusoid(tau: Sequence[float], values: Sequence[float]) -> SinusoidFit:
    """Least-squares harmonic fit, seeded by the linear fit at omega = pi."""
    tau = np.asarray(tau, dtype=float)
    values = np.asarray(values, dtype=float)
    basis = np.column_stack([np.ones_like(tau), np.cos(np.pi * tau), np.sin(np.pi * tau)])
    linear, *_ = np.linalg.lstsq(basis, values, rcond=None)
    p0 = [*linear, np.pi]
    try:
        params, _ = curve_fit(_sinusoid, tau, values, p0=p0, xtol=1e-15, ftol=1e-15, maxfev=2000)
    except RuntimeError as e:
        logger.warning("harmonic fit did not converge (%s); keeping omega = pi", e)
        params = np.asarray(p0)
    residual = float(np.max(np.abs(_sinusoid(tau, *params) - values)))
    seeded = float(np.max(np.abs(_sinusoid(tau, *p0) - values)))
    if seeded < residual:
        params, residual = np.asarray(p0), seeded
    return SinusoidFit(*(float(p) for p in params[:3]), float(params[3]), residual)
