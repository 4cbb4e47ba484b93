"""Command-line front end: ``python -m weakwire.cli <command> [flags]``.

Exit codes: 0 success, 1 input error, 2 forbidden outcome, 3 verification failure.
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from config.weakwire_config import ConfigError, configure_logging, logger
from tools.encoding import to_str, write_csv
from tools.types import AverageHalf, CheckStatus, Command, ConstraintMode
from weakwire.circuit import (
    CircuitSpec,
    SwapAlpha,
    born_probability,
    interior_cut,
    sqrt_swap_circuit,
    transition_amplitude,
)
from weakwire.errors import (
    CircuitFormatError,
    ForbiddenOutcomeError,
    GateTypeError,
    UsageError,
    WeakwireError,
)
from weakwire.hvmodel import (
    OUTCOME_SIGNS,
    average_im_s,
    average_re_s,
    count_probability,
    outcome_label,
    solve_outcomes,
)
from weakwire.locality_checks import DEFAULT_TAU_STEP, run_suite, sweep_grid
from weakwire.qstate import random_state
from weakwire.weakvalues import fit_sinusoid, swap_sweep, weak_vector, weak_vectors

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FORBIDDEN = 2
EXIT_VERIFY = 3

OSCILLATION_ALPHA = 2.3
OSCILLATION_COMPONENTS = ("re_wax", "re_wbx")
FIT_TOL = 1e-8
REPRODUCTIONS = ("fig3", "fig5", "fig6")
REPRODUCTION_ALIASES = {"oscillation": "fig3", "boundary-values": "fig5", "solutions": "fig6"}


@dataclass(frozen=True)
class RunConfig:
    command: Command
    input: Optional[Path] = None
    output: Optional[Path] = None
    tolerance: Optional[float] = None
    tau_step: float = DEFAULT_TAU_STEP
    n_seeds: int = 200
    rng_seed: int = 0
    constraint_mode: ConstraintMode = ConstraintMode.FULL
    figure: Optional[str] = None
    alpha: float = 0.5
    outcomes: tuple[str, ...] = tuple(OUTCOME_SIGNS)
    half: Optional[AverageHalf] = None
    gate: Optional[int] = None
    fit_output: Optional[Path] = None
    verbose: bool = False

    def __post_init__(self):
        for name in ("tau_step", "alpha"):
            if not getattr(self, name) > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.tolerance is not None and not self.tolerance > 0:
            raise UsageError("--tolerance must be positive")
        if self.n_seeds < 1:
            raise UsageError("--seeds must be at least 1")
        if self.rng_seed < 0:
            raise UsageError("--rng-seed must be non-negative")
        if self.input is not None and not self.input.is_file():
            raise UsageError(f"input file {self.input} is not readable")

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        try:
            return cls(
                command=Command.from_string(ns.command),
                input=Path(ns.input) if ns.input else None,
                output=Path(ns.output) if ns.output else None,
                tolerance=ns.tolerance,
                tau_step=ns.tau_step,
                n_seeds=ns.seeds,
                rng_seed=ns.rng_seed,
                constraint_mode=ConstraintMode.from_string(ns.mode),
                figure=ns.figure,
                alpha=ns.alpha,
                outcomes=parse_outcomes(ns.outcome),
                half=AverageHalf.from_string(ns.half) if ns.half else None,
                gate=ns.gate,
                fit_output=Path(ns.fit_output) if ns.fit_output else None,
                verbose=ns.verbose,
            )
        except ValueError as e:
            if isinstance(e, WeakwireError):
                raise
            raise UsageError(str(e))


def parse_outcomes(text: Optional[str]) -> tuple[str, ...]:
    """``None`` for all four, a label like ``10``, or signs like ``-1,1``."""
    if not text:
        return tuple(OUTCOME_SIGNS)
    labels = []
    for item in text.split(";"):
        item = item.strip()
        if item in OUTCOME_SIGNS:
            labels.append(item)
            continue
        parts = [p.strip() for p in item.split(",")]
        if len(parts) != 2 or any(p not in ("1", "+1", "-1", "+", "-") for p in parts):
            raise UsageError(f"invalid outcome {item!r}, expected e.g. 00 or 1,-1")
        signs = [-1 if p.startswith("-") else 1 for p in parts]
        labels.append(outcome_label(*signs))
    return tuple(labels)


def load_circuit(path: Optional[Path]) -> CircuitSpec:
    if path is None:
        raise UsageError("this command needs --input")
    try:
        document = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise CircuitFormatError(f"{path} is not valid JSON: {e}")
    return CircuitSpec.from_dict(document)


def emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text)


def cmd_weak(config: RunConfig) -> int:
    c = load_circuit(config.input)
    cuts = []
    for cut in c.moment_cuts():
        cuts.append({"cut": cut, "weak_vectors": weak_vectors(c, cut)})
    report = {
        "amplitude": transition_amplitude(c),
        "probability": born_probability(c),
        "cuts": cuts,
    }
    emit(to_str(report), config.output)
    return EXIT_OK


def _sweep_gate(c: CircuitSpec, gate_id: Optional[int]) -> int:
    if gate_id is not None:
        return gate_id
    for i, (_, g) in enumerate(c.gates):
        if isinstance(g, SwapAlpha):
            return i
    raise GateTypeError("circuit has no SwapAlpha gate to sweep")


def cmd_sweep(config: RunConfig) -> int:
    c = load_circuit(config.input)
    gate_id = _sweep_gate(c, config.gate)
    g = c.gate(gate_id)
    if not isinstance(g, SwapAlpha):
        raise GateTypeError(f"gate {gate_id} is {type(g).__name__}, not SwapAlpha")
    series = swap_sweep(c, gate_id, sweep_grid(g.alpha, config.tau_step))
    emit(series.to_csv(), config.output)
    return EXIT_OK


def cmd_verify(config: RunConfig) -> int:
    c = load_circuit(config.input)
    reports = run_suite(c, config.tolerance, config.tau_step)
    emit(to_str([r.to_dict() for r in reports]), config.output)
    failed = [r.check_name for r in reports if r.status is CheckStatus.FAILED]
    if failed:
        logger.error("verification failed: %s", ", ".join(failed))
        return EXIT_VERIFY
    return EXIT_OK


def solver_report(config: RunConfig, sets) -> dict:
    probabilities = count_probability(sets) if any(s.count for s in sets.values()) else None
    report = {
        "problem": {"circuit": "sqrt-swap", "alpha": config.alpha, "prep": ["x", "y"], "meas": "z"},
        "mode": config.constraint_mode,
        "n_seeds": {label: s.seeds_used for label, s in sets.items()},
        "converged_starts": {label: s.candidates for label, s in sets.items()},
        "rng_seed": config.rng_seed,
        "solutions": [
            dict(outcome=label, **h.to_dict()) for label, s in sets.items() for h in s.solutions
        ],
        "counts": {label: s.count for label, s in sets.items()},
        "probabilities": probabilities,
    }
    if config.half is not None:
        grid = sweep_grid(config.alpha, config.tau_step)
        averages = {}
        for label, s in sets.items():
            if not s.count:
                continue
            re_a, re_b = average_re_s(s, grid)
            im_a, im_b = average_im_s(s, grid, config.half)
            averages[label] = {
                "half": config.half,
                "tau": grid,
                "re_s_a": re_a,
                "re_s_b": re_b,
                "im_s_a": im_a,
                "im_s_b": im_b,
            }
        report["averages"] = averages
    return report


def cmd_hv_solve(config: RunConfig) -> int:
    sets = solve_outcomes(
        alpha=config.alpha,
        outcomes=config.outcomes,
        n_seeds=config.n_seeds,
        rng_seed=config.rng_seed,
        mode=config.constraint_mode,
    )
    emit(to_str(solver_report(config, sets)), config.output)
    return EXIT_OK


def reproduce_oscillation(config: RunConfig) -> tuple[str, dict]:
    """Weak-value components through SwapAlpha(2.3) between random two-qubit states."""
    rng = np.random.default_rng(config.rng_seed)
    c = CircuitSpec(
        2, random_state(2, rng), ((SwapAlpha(0, 1, OSCILLATION_ALPHA),),), random_state(2, rng)
    )
    series = swap_sweep(c, 0, sweep_grid(OSCILLATION_ALPHA, config.tau_step))
    columns = {"re_wax": series.w_a[:, 0].real, "re_wbx": series.w_b[:, 0].real}
    fits = {name: fit_sinusoid(series.tau_grid, values) for name, values in columns.items()}
    rows = zip(series.tau_grid, *(columns[name] for name in OSCILLATION_COMPONENTS))
    csv_text = write_csv(["tau", *OSCILLATION_COMPONENTS], rows)
    summary = {
        "reproduction": "oscillation",
        "rng_seed": config.rng_seed,
        "alpha": OSCILLATION_ALPHA,
        "fits": fits,
        "max_fit_residual": max(f.max_residual for f in fits.values()),
    }
    return csv_text, summary


def boundary_values() -> list[dict]:
    """Weak vectors at tau = 0 and 0.5 inside sqrt-SWAP for each allowed outcome."""
    rows = []
    for label in ("00", "10", "11"):
        c = sqrt_swap_circuit(*OUTCOME_SIGNS[label])
        for tau in (0.0, 0.5):
            cut = interior_cut(c, 0, tau)
            w_a, w_b = weak_vector(c, cut, 0), weak_vector(c, cut, 1)
            rows.append({"outcome": label, "tau": tau, "w_a": w_a, "w_b": w_b})
    return rows


def cmd_reproduce(config: RunConfig) -> int:
    figure = REPRODUCTION_ALIASES.get(config.figure, config.figure)
    if figure not in REPRODUCTIONS:
        choices = ", ".join(f"{fid} ({alias})" for alias, fid in REPRODUCTION_ALIASES.items())
        raise UsageError(f"unknown reproduction {config.figure!r}; choose from {choices}")
    if figure == "fig3":
        csv_text, summary = reproduce_oscillation(config)
        emit(csv_text, config.output)
        if config.fit_output is not None:
            config.fit_output.write_text(to_str(summary))
        logger.info("oscillation fit residual %.3e", summary["max_fit_residual"])
        return EXIT_OK if summary["max_fit_residual"] <= FIT_TOL else EXIT_VERIFY
    if figure == "fig5":
        emit(to_str(boundary_values()), config.output)
        return EXIT_OK
    sets = solve_outcomes(
        alpha=0.5, n_seeds=config.n_seeds, rng_seed=config.rng_seed, mode=config.constraint_mode
    )
    emit(to_str(solver_report(config, sets)), config.output)
    return EXIT_OK


HANDLERS: dict[Command, Callable[[RunConfig], int]] = {
    Command.WEAK: cmd_weak,
    Command.SWEEP: cmd_sweep,
    Command.VERIFY: cmd_verify,
    Command.HV_SOLVE: cmd_hv_solve,
    Command.REPRODUCE: cmd_reproduce,
}


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="weakwire", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = ArgumentParser(add_help=False)
    common.add_argument("--input", help="circuit JSON document")
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--tolerance", type=float, help="absolute check tolerance")
    common.add_argument("--tau-step", type=float, default=DEFAULT_TAU_STEP)
    common.add_argument("--seeds", type=int, default=200, help="solver starts per outcome")
    common.add_argument("--rng-seed", type=int, default=0)
    common.add_argument("--mode", default="full", choices=[m.value for m in ConstraintMode])
    common.add_argument("--figure", help="reproduction id: fig3, fig5, fig6 or an alias")
    common.add_argument("--alpha", type=float, default=0.5, help="SwapAlpha exponent (hv-solve)")
    common.add_argument("--outcome", help="outcome label or signs, e.g. 10 or -1,1 (hv-solve)")
    common.add_argument("--half", choices=[h.value for h in AverageHalf])
    common.add_argument("--gate", type=int, help="gate id to sweep (default: first SwapAlpha)")
    common.add_argument("--fit-output", help="fit summary JSON for the oscillation reproduction")
    common.add_argument("--verbose", action="store_true")
    for command in Command:
        sub.add_parser(command.value, parents=[common])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        configure_logging("DEBUG" if ns.verbose else None)
        config = RunConfig.from_args(ns)
        return HANDLERS[config.command](config)
    except ForbiddenOutcomeError as e:
        message = str(e)
        if "zero transition amplitude" not in message:
            message = f"zero transition amplitude: {message}"
        sys.stderr.write(f"error: {message}\n")
        return EXIT_FORBIDDEN
    except (ConfigError, WeakwireError, OSError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
