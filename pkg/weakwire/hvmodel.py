"""Hidden-variable model: a complex 3-vector per qubit through a SwapAlpha gate.

Each qubit carries s, and the pair obeys ds_a/dtau = (pi/2) s_b x s_a with the
mirror equation for s_b. A solution is a pair of initial vectors (12 reals)
whose integrated history meets the interaction constraints
s_a.s_a = s_b.s_b = s_a.s_b = 1 together with the preparation and
measurement constraints n.s = 1 at both ends. Solutions are found by shooting
from many random starts and counted after deduplication.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from config.weakwire_config import get_config, logger
from tools.encoding import write_csv
from tools.types import AverageHalf, ConstraintMode
from weakwire.circuit import WireMeasurement
from weakwire.errors import DivergenceError, DomainError, PairingError
from weakwire.qstate import X_HAT, Y_HAT, Z_HAT, BlochVector
from weakwire.weakvalues import series_header, series_rows

DEFAULT_STEP = 1e-3
TOL_SOLVE = 1e-10
TOL_ENTRY = 1e-8
DEDUP_TOL = 1e-4
SEED_RANGE = 2.0
OUTCOME_SIGNS = {"00": (1, 1), "01": (1, -1), "10": (-1, 1), "11": (-1, -1)}


def outcome_label(sign_a: int, sign_b: int) -> str:
    return ("0" if sign_a == 1 else "1") + ("0" if sign_b == 1 else "1")


@dataclass(frozen=True)
class HvProblem:
    alpha: float
    prep_a: BlochVector
    prep_b: BlochVector
    meas_a: WireMeasurement
    meas_b: WireMeasurement
    constraint_mode: ConstraintMode = ConstraintMode.FULL
    step: float = DEFAULT_STEP

    def __post_init__(self):
        for name in ("prep_a", "prep_b"):
            if not getattr(self, name).is_unit():
                raise DomainError(f"{name} is not a unit Bloch vector")
        if self.alpha < 0 or self.step <= 0:
            raise DomainError(f"need alpha >= 0 and step > 0, got {self.alpha} and {self.step}")

    @property
    def outcome(self) -> str:
        return outcome_label(self.meas_a.outcome, self.meas_b.outcome)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "prep": [self.prep_a.to_dict(), self.prep_b.to_dict()],
            "meas": [self.meas_a.to_dict(), self.meas_b.to_dict()],
            "outcome": self.outcome,
        }


def sqrt_swap_problem(
    sign_a: int,
    sign_b: int,
    alpha: float = 0.5,
    mode: ConstraintMode = ConstraintMode.FULL,
) -> HvProblem:
    """x-hat (x) y-hat prepared, both wires measured along z-hat with the given signs."""
    return HvProblem(
        alpha=alpha,
        prep_a=X_HAT,
        prep_b=Y_HAT,
        meas_a=WireMeasurement(Z_HAT, sign_a),
        meas_b=WireMeasurement(Z_HAT, sign_b),
        constraint_mode=mode,
    )


def pack(s_a0: np.ndarray, s_b0: np.ndarray) -> np.ndarray:
    """[Re s_a, Im s_a, Re s_b, Im s_b] as 12 reals (leading batch axes kept)."""
    s_a0, s_b0 = np.asarray(s_a0, dtype=complex), np.asarray(s_b0, dtype=complex)
    return np.concatenate([s_a0.real, s_a0.imag, s_b0.real, s_b0.imag], axis=-1)


def unpack(params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    params = np.asarray(params, dtype=float)
    s_a = params[..., 0:3] + 1j * params[..., 3:6]
    s_b = params[..., 6:9] + 1j * params[..., 9:12]
    return s_a, s_b


def _conj_params(params: np.ndarray) -> np.ndarray:
    out = np.array(params, dtype=float)
    out[..., 3:6] *= -1
    out[..., 9:12] *= -1
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    taus: np.ndarray
    s_a: np.ndarray
    s_b: np.ndarray

    def invariants(self) -> np.ndarray:
        """s_a.s_a, s_b.s_b, s_a.s_b at every sample, shape (T, 3)."""
        dot = lambda u, v: np.sum(u * v, axis=-1)  # noqa: E731
        return np.stack(
            [dot(self.s_a, self.s_a), dot(self.s_b, self.s_b), dot(self.s_a, self.s_b)], axis=-1
        )

    def to_csv(self) -> str:
        return write_csv(series_header("s"), series_rows(self.taus, self.s_a, self.s_b))


@dataclass(frozen=True, eq=False)
class HiddenPair:
    s_a0: np.ndarray
    s_b0: np.ndarray
    residual: float

    @classmethod
    def from_params(cls, params: np.ndarray, residual: float) -> "HiddenPair":
        s_a, s_b = unpack(params)
        return cls(s_a, s_b, float(residual))

    @property
    def params(self) -> np.ndarray:
        return pack(self.s_a0, self.s_b0)

    def conjugate(self) -> "HiddenPair":
        return HiddenPair(self.s_a0.conj(), self.s_b0.conj(), self.residual)

    def trajectory(self, alpha: float, step: float = DEFAULT_STEP) -> Trajectory:
        return integrate_s(self.s_a0, self.s_b0, alpha, step)

    def to_dict(self):
        return {"s_a0": self.s_a0, "s_b0": self.s_b0, "residual": self.residual}


@dataclass(frozen=True)
class SolutionSet:
    problem: HvProblem
    solutions: tuple[HiddenPair, ...]
    dedup_tol: float = DEDUP_TOL
    seeds_used: int = 0
    rng_seed: int = 0
    seed_scale: float = 1.0
    candidates: int = field(default=0, compare=False)

    @property
    def residuals(self) -> list[float]:
        return [s.residual for s in self.solutions]

    @property
    def count(self) -> int:
        return len(self.solutions)


def _rhs(s_a: np.ndarray, s_b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = np.pi / 2.0
    return k * np.cross(s_b, s_a), k * np.cross(s_a, s_b)


def _n_steps(alpha: float, step: float) -> int:
    if step <= 0:
        raise DomainError(f"step must be positive, got {step}")
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    return int(np.ceil(alpha / step - 1e-9)) if alpha > 0 else 0


def integrate_s(
    s_a0: Sequence[complex], s_b0: Sequence[complex], alpha: float, step: float = DEFAULT_STEP
) -> Trajectory:
    """Fixed-step RK4 on [0, alpha]; the step is shrunk so alpha is hit exactly."""
    n = _n_steps(alpha, step)
    h = alpha / n if n else 0.0
    s_a = np.empty((n + 1, 3), dtype=complex)
    s_b = np.empty((n + 1, 3), dtype=complex)
    s_a[0], s_b[0] = np.asarray(s_a0, dtype=complex), np.asarray(s_b0, dtype=complex)
    for i in range(n):
        a, b = s_a[i], s_b[i]
        k1a, k1b = _rhs(a, b)
        k2a, k2b = _rhs(a + h / 2 * k1a, b + h / 2 * k1b)
        k3a, k3b = _rhs(a + h / 2 * k2a, b + h / 2 * k2b)
        k4a, k4b = _rhs(a + h * k3a, b + h * k3b)
        s_a[i + 1] = a + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
        s_b[i + 1] = b + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if not (np.all(np.isfinite(s_a[i + 1])) and np.all(np.isfinite(s_b[i + 1]))):
            raise DivergenceError(f"integration diverged at tau={(i + 1) * h:.6g}")
    return Trajectory(np.linspace(0.0, alpha, n + 1), s_a, s_b)


def _cross_matrix(m: np.ndarray) -> np.ndarray:
    z = np.zeros(m.shape[:-1], dtype=m.dtype)
    x, y, w = m[..., 0], m[..., 1], m[..., 2]
    return np.stack(
        [np.stack([z, -w, y], -1), np.stack([w, z, -x], -1), np.stack([-y, x, z], -1)], -2
    )


def propagate_rk4(
    s_a0: np.ndarray, s_b0: np.ndarray, alpha: float, step: float = DEFAULT_STEP
) -> tuple[np.ndarray, np.ndarray]:
    """Final values of integrate_s without stepping.

    The flow keeps m = (s_a + s_b)/2 fixed and moves d = s_a - s_b by
    d' = pi m x d, so one RK4 step is d -> P(hK) d with K = pi [m]x and
    P(z) = 1 + z + z^2/2 + z^3/6 + z^4/24. Accepts leading batch axes.
    """
    s_a0, s_b0 = np.asarray(s_a0, dtype=complex), np.asarray(s_b0, dtype=complex)
    n = _n_steps(alpha, step)
    if n == 0:
        return s_a0.copy(), s_b0.copy()
    h = alpha / n
    m = (s_a0 + s_b0) / 2.0
    d = s_a0 - s_b0
    z = h * np.pi * _cross_matrix(m)
    z2 = z @ z
    eye = np.broadcast_to(np.eye(3, dtype=complex), z.shape)
    P = eye + z + z2 / 2.0 + z2 @ z / 6.0 + z2 @ z2 / 24.0
    with np.errstate(over="ignore", invalid="ignore"):
        d_n = (np.linalg.matrix_power(P, n) @ d[..., None])[..., 0]
    return m + d_n / 2.0, m - d_n / 2.0


def exact_trajectory(
    s_a0: Sequence[complex], s_b0: Sequence[complex], tau
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form s_a(tau), s_b(tau), valid when s_a.s_a = s_b.s_b = s_a.s_b = 1 initially."""
    s_a0, s_b0 = np.asarray(s_a0, dtype=complex), np.asarray(s_b0, dtype=complex)
    tau = np.asarray(tau, dtype=float)[..., None]
    m = (s_a0 + s_b0) / 2.0
    d0 = s_a0 - s_b0
    half = 0.5 * (d0 * np.cos(np.pi * tau) + np.cross(m, d0) * np.sin(np.pi * tau))
    return m + half, m - half


def constraint_vector(params: np.ndarray, p: HvProblem) -> np.ndarray:
    """Signed violations, 14 reals in full mode and 10 in relaxed mode.

    Order: Re/Im of s_a.s_a-1, s_b.s_b-1, s_a.s_b-1 at tau=0, then the
    boundary terms n_a.s_a0-1, n_b.s_b0-1, f_a.s_a(alpha)-1, f_b.s_b(alpha)-1
    (Re/Im in full mode, Re only in relaxed mode).
    """
    s_a, s_b = unpack(params)
    s_af, s_bf = propagate_rk4(s_a, s_b, p.alpha, p.step)
    dot = lambda u, v: np.sum(u * v, axis=-1)  # noqa: E731
    interaction = [dot(s_a, s_a) - 1, dot(s_b, s_b) - 1, dot(s_a, s_b) - 1]
    boundary = [
        dot(s_a, p.prep_a.as_array()) - 1,
        dot(s_b, p.prep_b.as_array()) - 1,
        dot(s_af, p.meas_a.direction.as_array()) - 1,
        dot(s_bf, p.meas_b.direction.as_array()) - 1,
    ]
    parts = []
    for c in interaction:
        parts += [c.real, c.imag]
    for c in boundary:
        parts += [c.real, c.imag] if p.constraint_mode is ConstraintMode.FULL else [c.real]
    return np.stack(parts, axis=-1)


def constraint_residual(params: np.ndarray, p: HvProblem) -> float:
    r = constraint_vector(params, p)
    return float(np.sum(r * r))


def _cost(r: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        cost = np.sum(r * r, axis=-1)
    return np.where(np.isfinite(cost), cost, np.inf)


def _jacobian(X: np.ndarray, r: np.ndarray, p: HvProblem) -> np.ndarray:
    J = np.empty(r.shape + (X.shape[-1],))
    for k in range(X.shape[-1]):
        eps = 1e-7 * (1.0 + np.abs(X[:, k]))
        Xk = X.copy()
        Xk[:, k] += eps
        J[..., k] = (constraint_vector(Xk, p) - r) / eps[:, None]
    return J


def gauss_newton(
    X: np.ndarray, p: HvProblem, max_iter: int = 100, cost_tol: float = 1e-26
) -> tuple[np.ndarray, np.ndarray]:
    """Damped Gauss-Newton with Armijo step halving, vectorized over starts (rows of X)."""
    X = np.array(X, dtype=float)
    r = constraint_vector(X, p)
    cost = _cost(r)
    active = np.isfinite(cost)
    n_params = X.shape[-1]
    for _ in range(max_iter):
        idx = np.flatnonzero(active & (cost > cost_tol))
        if idx.size == 0:
            break
        Xa, ra, ca = X[idx], r[idx], cost[idx]
        J = _jacobian(Xa, ra, p)
        JT = np.swapaxes(J, -1, -2)
        A = JT @ J
        g = (JT @ ra[..., None])[..., 0]
        lam = 1e-12 * (1.0 + np.trace(A, axis1=-2, axis2=-1) / n_params)
        A = A + lam[:, None, None] * np.eye(n_params)
        with np.errstate(over="ignore", invalid="ignore"):
            delta = -np.linalg.solve(A, g[..., None])[..., 0]
        slope = 2.0 * np.sum(g * delta, axis=-1)
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        for _ in range(40):
            pending = np.flatnonzero(~accepted)
            if pending.size == 0:
                break
            trial = Xa[pending] + t[pending, None] * delta[pending]
            rt = constraint_vector(trial, p)
            ct = _cost(rt)
            ok = ct <= ca[pending] + 1e-4 * t[pending] * slope[pending]
            hit = pending[ok]
            Xa[hit], ra[hit], ca[hit] = trial[ok], rt[ok], ct[ok]
            accepted[hit] = True
            t[pending[~ok]] *= 0.5
        X[idx], r[idx], cost[idx] = Xa, ra, ca
        active[idx[~accepted]] = False
    return X, cost


def _polish(x: np.ndarray, p: HvProblem) -> tuple[np.ndarray, float]:
    method = "lm" if p.constraint_mode is ConstraintMode.FULL else "trf"
    fit = least_squares(
        lambda v: constraint_vector(v, p), x, method=method, xtol=1e-14, ftol=1e-14, gtol=1e-14
    )
    cost = constraint_residual(fit.x, p)
    return (fit.x, cost) if np.isfinite(cost) else (x, np.inf)


def seed_params(rng_seed: int, index: int, scale: float = 1.0) -> np.ndarray:
    """Start `index` of a run, independent of how starts are scheduled."""
    rng = np.random.default_rng([rng_seed, index])
    return rng.uniform(-SEED_RANGE, SEED_RANGE, size=12) * scale


def richardson_gap(params: np.ndarray, p: HvProblem) -> float:
    """Largest change in the constraint vector when the RK4 step is halved."""
    r = constraint_vector(params, p)
    r_half = constraint_vector(params, replace(p, step=p.step / 2))
    return float(np.max(np.abs(r_half - r)))


def _accepts(params: np.ndarray, p: HvProblem) -> bool:
    r = constraint_vector(params, p)
    if not (float(np.sum(r * r)) <= TOL_SOLVE and float(np.max(np.abs(r))) <= TOL_ENTRY):
        return False
    return richardson_gap(params, p) <= TOL_ENTRY


def _descend(X: np.ndarray, p: HvProblem) -> list[HiddenPair]:
    X, cost = gauss_newton(X, p)
    found = []
    for x, c in zip(X, cost):
        if not c < 1e-6:
            continue
        if c > 1e-24:
            px, pc = _polish(x, p)
            if pc < c:
                x, c = px, pc
        if _accepts(x, p):
            found.append(HiddenPair.from_params(x, constraint_residual(x, p)))
    return found


def dedupe(s: SolutionSet, dedup_tol: float = DEDUP_TOL) -> SolutionSet:
    """Keep the lowest-residual representative of each cluster in parameter space."""
    if dedup_tol <= 0:
        raise DomainError(f"dedup_tol must be positive, got {dedup_tol}")
    kept: list[HiddenPair] = []
    for cand in sorted(s.solutions, key=lambda h: h.residual):
        if all(np.linalg.norm(cand.params - k.params) > dedup_tol for k in kept):
            kept.append(cand)
    kept.sort(key=lambda h: tuple(np.round(h.params, 6)))
    return replace(s, solutions=tuple(kept), dedup_tol=dedup_tol)


def solve(
    p: HvProblem,
    n_seeds: int = 200,
    rng_seed: int = 0,
    seed_scale: float = 1.0,
    dedup_tol: float = DEDUP_TOL,
    threads: Optional[int] = None,
) -> SolutionSet:
    if n_seeds < 1:
        raise DomainError(f"n_seeds must be at least 1, got {n_seeds}")
    threads = get_config()["threads"] if threads is None else threads
    X = np.stack([seed_params(rng_seed, i, seed_scale) for i in range(n_seeds)])
    chunks = np.array_split(X, min(threads, n_seeds))
    logger.info("solving outcome %s from %d starts", p.outcome, n_seeds)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        found = [h for batch in pool.map(lambda x: _descend(x, p), chunks) for h in batch]
    raw = SolutionSet(p, tuple(found), dedup_tol, n_seeds, rng_seed, seed_scale, len(found))
    result = dedupe(raw, dedup_tol)
    logger.info(
        "outcome %s: %d converged starts, %d distinct solutions",
        p.outcome,
        len(found),
        result.count,
    )
    return result


def solve_stable(
    p: HvProblem,
    n_seeds: int = 200,
    rng_seed: int = 0,
    max_seeds: int = 3200,
    dedup_tol: float = DEDUP_TOL,
    threads: Optional[int] = None,
) -> SolutionSet:
    """Double n_seeds until the count is unchanged across two successive doublings.

    If no plateau appears before max_seeds the seed range is widened by 2 once
    and the search restarts.
    """
    scale = 1.0
    while True:
        n, counts, result = n_seeds, [], None
        while n <= max_seeds:
            result = solve(p, n, rng_seed, scale, dedup_tol, threads)
            counts.append(result.count)
            if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
                return result
            n *= 2
        if scale > 1.0:
            logger.warning("outcome %s: no count plateau up to %d starts", p.outcome, max_seeds)
            return result
        logger.warning("outcome %s: widening the seed range", p.outcome)
        scale *= 2.0


def solve_outcomes(
    alpha: float = 0.5,
    outcomes: Sequence[str] = tuple(OUTCOME_SIGNS),
    n_seeds: int = 200,
    rng_seed: int = 0,
    mode: ConstraintMode = ConstraintMode.FULL,
    stable: bool = True,
    threads: Optional[int] = None,
) -> dict[str, SolutionSet]:
    out = {}
    for label in outcomes:
        if label not in OUTCOME_SIGNS:
            raise DomainError(f"unknown outcome {label!r}")
        p = sqrt_swap_problem(*OUTCOME_SIGNS[label], alpha=alpha, mode=mode)
        if stable:
            out[label] = solve_stable(p, n_seeds, rng_seed, threads=threads)
        else:
            out[label] = solve(p, n_seeds, rng_seed, threads=threads)
    return out


def count_probability(sets: Mapping[str, SolutionSet]) -> dict[str, float]:
    total = sum(s.count for s in sets.values())
    if total == 0:
        raise DomainError("no solutions in any outcome")
    return {label: s.count / total for label, s in sets.items()}


def states_at(pair: HiddenPair, taus: Sequence[float], step: float = DEFAULT_STEP):
    """(s_a, s_b) of one solution at each tau, each shape (T, 3)."""
    finals = [propagate_rk4(pair.s_a0, pair.s_b0, float(t), step) for t in taus]
    return np.array([f[0] for f in finals]), np.array([f[1] for f in finals])


def _require_nonempty(s: SolutionSet) -> None:
    if not s.solutions:
        raise DomainError(f"outcome {s.problem.outcome} has no solutions to average")


def average_re_s(s: SolutionSet, tau_grid: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    _require_nonempty(s)
    states = [states_at(h, tau_grid, s.problem.step) for h in s.solutions]
    return (
        np.mean([a.real for a, _ in states], axis=0),
        np.mean([b.real for _, b in states], axis=0),
    )


def _prep_mismatch(h: HiddenPair, p: HvProblem) -> float:
    total = 0.0
    for s, n in ((h.s_a0, p.prep_a.as_array()), (h.s_b0, p.prep_b.as_array())):
        total += float(np.linalg.norm(s - n - 1j * np.cross(n, s)))
    return total


def conjugate_pairs(s: SolutionSet, tol: float = 1e-5) -> list[tuple[HiddenPair, HiddenPair]]:
    """Match each solution with the solution nearest its complex conjugate.

    Within a pair the member that better satisfies s = n + i(n x s) at the
    preparation comes first.
    """
    sols = list(s.solutions)
    if len(sols) % 2:
        raise PairingError(f"{len(sols)} solutions cannot be split into conjugate pairs")
    free = set(range(len(sols)))
    pairs = []
    for i in range(len(sols)):
        if i not in free:
            continue
        free.discard(i)
        target = _conj_params(sols[i].params)
        dist = {j: np.linalg.norm(sols[j].params - target) for j in free}
        if not dist:
            raise PairingError(f"solution {i} has no conjugate partner")
        j = min(dist, key=lambda k: (dist[k], k))
        if dist[j] > tol:
            raise PairingError(f"solution {i} has no conjugate within {tol}")
        free.discard(j)
        first, second = sols[i], sols[j]
        mi, mj = _prep_mismatch(first, s.problem), _prep_mismatch(second, s.problem)
        if mj < mi - 1e-9 or (abs(mj - mi) <= 1e-9 and tuple(second.params) < tuple(first.params)):
            first, second = second, first
        pairs.append((first, second))
    return pairs


def average_im_s(
    s: SolutionSet, tau_grid: Sequence[float], half: AverageHalf = AverageHalf.ALL
) -> tuple[np.ndarray, np.ndarray]:
    _require_nonempty(s)
    if half is AverageHalf.FIRST_HALF:
        members = [first for first, _ in conjugate_pairs(s)]
    else:
        members = list(s.solutions)
    states = [states_at(h, tau_grid, s.problem.step) for h in members]
    return (
        np.mean([a.imag for a, _ in states], axis=0),
        np.mean([b.imag for _, b in states], axis=0),
    )
