"""Command-line front end.

Subcommands::

    sweep     separable minimum over an efficiency grid (CSV)
    critical  bisection for the critical efficiency (report + probe CSV)
    verify    closed-form / explicit-attack / solver cross-checks (exit code)
    floor     best entangled value under the assignment channel (CSV)

Exit codes: 0 success, 1 a solve or check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import re
import sys
from contextlib import contextmanager
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import oracle
from .critical import (
    DEFAULT_BRACKET,
    DEFAULT_TOL,
    MonotonicityError,
    NoCriticalPoint,
    SolverFailure,
    entangled_value,
    find_critical_eta,
)
from .model import ASSIGNMENT, DISCARD, build_program
from .oracle import BELL_TEST_CRITICAL_ETA, ETA_BELL, ETA_THIRD, ensemble_from_params
from .solver import solve
from .witness import (
    assignment_channel,
    build_target_state,
    build_theta_witness,
    expectation,
)

log = logging.getLogger("untrusted_witness")

SWEEP_HEADER = ["eta", "separable_min", "entangled_value", "oracle_value", "residual"]
CRITICAL_HEADER = ["eta", "separable_min", "entangled_value"]
FLOOR_HEADER = ["eta", "entangled_floor", "bell_state_value"]

SNAP_TOL = 1e-12
BOUNDARIES = (ETA_THIRD, ETA_BELL)
EXACT_GATE = 1e-12
SOLVER_AGREEMENT = 1e-5
UPPER_BOUND_SLACK = 1e-6

_PI_RE = re.compile(
    r"^\s*(?P<num>\d+(?:\.\d*)?)?\s*\*?\s*pi\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


class UsageError(ValueError):
    pass


def parse_theta(text: str) -> float:
    """Angle in radians from ``pi/4``, ``2*pi/9``, ``pi`` or a plain decimal."""
    m = _PI_RE.match(text)
    if m:
        num = float(m["num"]) if m["num"] else 1.0
        den = float(m["den"]) if m["den"] else 1.0
        return num * math.pi / den
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"cannot parse angle {text!r}") from None


def parse_vector(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"expected three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"expected three comma-separated numbers, got {text!r}") from None


def fmt(v: float) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if v == 0:
        return "0"
    return f"{v:.12g}"


def snap(eta: float) -> float:
    for boundary in BOUNDARIES:
        if abs(eta - boundary) <= SNAP_TOL:
            return boundary
    return eta


def eta_grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError(f"eta step must be positive, got {step}")
    if not 0 <= start <= stop <= 1:
        raise UsageError(f"eta grid must satisfy 0 <= start <= stop <= 1, got {start}..{stop}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [snap(min(1.0, round(start + k * step, 12))) for k in range(n)]


@dataclass(frozen=True)
class RunConfig:
    command: str
    strategy: str
    theta: float
    a: tuple[float, float, float]
    b: tuple[float, float, float]
    eta_start: float
    eta_stop: float
    eta_step: float
    tolerance: float
    output_path: str

    def __post_init__(self):
        if not 0 < self.theta <= math.pi / 4 + 1e-15:
            raise UsageError(f"theta must lie in (0, pi/4], got {self.theta}")
        if self.tolerance < 1e-8:
            raise UsageError(f"tolerance must be at least 1e-8, got {self.tolerance}")
        if not 0 <= self.eta_start <= self.eta_stop <= 1:
            raise UsageError("eta range must satisfy 0 <= start <= stop <= 1")

    @property
    def is_bell(self) -> bool:
        return abs(self.theta - math.pi / 4) <= 1e-12

    @property
    def zero_assignment(self) -> bool:
        return not any(self.a) and not any(self.b)

    def grid(self) -> list[float]:
        return eta_grid(self.eta_start, self.eta_stop, self.eta_step)


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _oracle_value(cfg: RunConfig, eta: float):
    if not cfg.is_bell:
        return None
    if cfg.strategy == DISCARD:
        return oracle.discard_bell_min(eta)
    if cfg.zero_assignment:
        return oracle.assignment_bell_min_zero(eta)
    return None


def cmd_sweep(cfg: RunConfig) -> int:
    witness = build_theta_witness(cfg.theta)
    grid = cfg.grid()
    if cfg.strategy == DISCARD and grid and grid[0] == 0:
        raise UsageError("the discard strategy is undefined at eta = 0")
    failures = 0
    with _open_out(cfg.output_path) as fh:
        w = _writer(fh)
        w.writerow(SWEEP_HEADER)
        for eta in grid:
            report = solve(build_program(witness, eta, cfg.strategy, cfg.a, cfg.b))
            ent = entangled_value(witness, cfg.strategy, eta, cfg.a, cfg.b, cfg.theta)
            if report.ok:
                row = [eta, report.optimum, ent, _oracle_value(cfg, eta), report.residuals.worst]
            else:
                failures += 1
                log.error("solve failed at eta=%s: %s", eta, report.status)
                row = [eta, "nan", ent, _oracle_value(cfg, eta), report.status]
            w.writerow([fmt(v) for v in row])
    return 1 if failures else 0


def cmd_critical(cfg: RunConfig) -> int:
    witness = build_theta_witness(cfg.theta)
    try:
        result = find_critical_eta(
            witness,
            cfg.strategy,
            theta=cfg.theta,
            a=cfg.a,
            b=cfg.b,
            tol=cfg.tolerance,
            bracket=(cfg.eta_start, cfg.eta_stop),
        )
    except (NoCriticalPoint, MonotonicityError, SolverFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    lo, hi = result.bracket
    print(
        f"eta_crit={result.eta_crit:.6f} bracket=[{lo:.6f}, {hi:.6f}] "
        f"iterations={result.iterations} margin={result.margin:.3e} "
        f"(Bell-test reference {BELL_TEST_CRITICAL_ETA})",
        file=sys.stderr if cfg.output_path == "-" else sys.stdout,
    )
    with _open_out(cfg.output_path) as fh:
        w = _writer(fh)
        w.writerow(CRITICAL_HEADER)
        for p in sorted(result.curve, key=lambda p: p.eta):
            w.writerow([fmt(p.eta), fmt(p.separable_min), fmt(p.entangled_value)])
    return 0


class _Checks:
    def __init__(self, out):
        self.out = out
        self.failed = 0
        self.count = 0

    def record(self, name: str, ok: bool, value: float, gate: float, **ctx) -> None:
        self.count += 1
        self.failed += not ok
        fields = " ".join(f"{k}={fmt(v) if isinstance(v, float) else v}" for k, v in ctx.items())
        print(
            f"check={name} {fields} value={value:.3e} gate={gate:.1e} "
            f"result={'PASS' if ok else 'FAIL'}",
            file=self.out,
        )


def _exact_eta(eta: float):
    if eta == ETA_THIRD:
        return Fraction(1, 3)
    if eta == ETA_BELL:
        return None
    return Fraction(repr(eta))


def cmd_verify(cfg: RunConfig, perturb_p3: float = 0.0) -> int:
    witness = build_theta_witness(math.pi / 4)
    checks = _Checks(sys.stdout)
    grid = [eta for eta in cfg.grid() if eta > 0]
    for eta in grid:
        params = oracle.appendix_params(eta)
        if perturb_p3:
            params = replace(params, p3=params.p3 + perturb_p3)
        ens = ensemble_from_params(params)
        exact = _exact_eta(eta)
        if exact is not None and not perturb_p3:
            cert = oracle.exact_certificate(exact)
            checks.record("exact_certificate", all(cert.values()), float(sum(not v for v in cert.values())), 0.0, eta=eta)
        for strategy in (DISCARD, ASSIGNMENT):
            program = build_program(witness, eta, strategy)
            closed = oracle.bell_closed_form(eta, strategy)
            feas = oracle.verify_feasibility(ens, program)
            checks.record("feasibility", feas.max_equality_residual <= EXACT_GATE
                          and feas.min_block_eigenvalue >= -EXACT_GATE,
                          max(feas.max_equality_residual, -feas.min_block_eigenvalue),
                          EXACT_GATE, strategy=strategy, eta=eta)
            err = abs(feas.objective - closed)
            checks.record("ensemble_objective", err <= EXACT_GATE, err, EXACT_GATE,
                          strategy=strategy, eta=eta)
            report = solve(program)
            if not report.ok:
                checks.record("solver_status", False, float("nan"), 0.0, strategy=strategy,
                              eta=eta, status=report.status)
                continue
            err = abs(report.optimum - closed)
            checks.record("solver_agreement", err <= cfg.tolerance, err, cfg.tolerance,
                          strategy=strategy, eta=eta)
            excess = report.optimum - feas.objective
            checks.record("upper_bound", excess <= UPPER_BOUND_SLACK, excess, UPPER_BOUND_SLACK,
                          strategy=strategy, eta=eta)

    for boundary, (left, right) in ((ETA_THIRD, (oracle.LOW, oracle.MIDDLE)),
                                    (ETA_BELL, (oracle.MIDDLE, oracle.HIGH))):
        p_left = np.array(oracle.appendix_params(boundary, left).as_tuple())
        p_right = np.array(oracle.appendix_params(boundary, right).as_tuple())
        jump = float(np.max(np.abs(p_left - p_right)))
        checks.record("branch_continuity", jump <= EXACT_GATE, jump, EXACT_GATE, eta=boundary)
        for strategy in (DISCARD, ASSIGNMENT):
            vals = [oracle.closed_form_objective(oracle.appendix_params(boundary, br), strategy)
                    for br in (left, right)]
            jump = abs(vals[0] - vals[1])
            checks.record("closed_form_continuity", jump <= EXACT_GATE, jump, EXACT_GATE,
                          strategy=strategy, eta=boundary)

    print(f"summary checks={checks.count} failed={checks.failed}")
    return 1 if checks.failed else 0


def cmd_floor(cfg: RunConfig) -> int:
    if cfg.strategy != ASSIGNMENT:
        raise UsageError("floor is only defined for the assignment strategy")
    witness = build_theta_witness(cfg.theta)
    target = build_target_state(cfg.theta)
    with _open_out(cfg.output_path) as fh:
        w = _writer(fh)
        w.writerow(FLOOR_HEADER)
        for eta in cfg.grid():
            floor = entangled_value(witness, ASSIGNMENT, eta, cfg.a, cfg.b)
            on_target = expectation(witness, assignment_channel(target, cfg.a, cfg.b, eta))
            w.writerow([fmt(eta), fmt(floor), fmt(on_target)])
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="untrusted-witness",
        description="Worst-case entanglement-witness values with untrusted lossy detectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    defaults = {
        "sweep": dict(start=0.4, stop=1.0, step=0.05, tol=1e-6),
        "critical": dict(start=DEFAULT_BRACKET[0], stop=DEFAULT_BRACKET[1], step=0.05, tol=DEFAULT_TOL),
        "verify": dict(start=0.05, stop=1.0, step=0.05, tol=SOLVER_AGREEMENT),
        "floor": dict(start=0.4, stop=1.0, step=0.05, tol=1e-6),
    }
    helps = {
        "sweep": "separable minimum over an efficiency grid",
        "critical": "critical efficiency by bisection (bracket = --eta-start..--eta-stop)",
        "verify": "cross-check explicit optimal attacks, closed forms and the solver",
        "floor": "best entangled value under the assignment channel",
    }
    for name, d in defaults.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--strategy", choices=[DISCARD, ASSIGNMENT],
                       default=ASSIGNMENT if name == "floor" else DISCARD)
        p.add_argument("--theta", default="pi/4", help="target angle, e.g. pi/6 or 0.5")
        p.add_argument("--assign-a", default="0,0,0", metavar="X,Y,Z")
        p.add_argument("--assign-b", default="0,0,0", metavar="X,Y,Z")
        p.add_argument("--eta-start", type=float, default=d["start"])
        p.add_argument("--eta-stop", type=float, default=d["stop"])
        p.add_argument("--eta-step", type=float, default=d["step"])
        p.add_argument("--tol", type=float, default=d["tol"])
        p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
        p.add_argument("-v", "--verbose", action="store_true", help="log each solve to stderr")
        if name == "verify":
            p.add_argument("--perturb-p3", type=float, default=0.0,
                           help="add this to p3 of every attack (self-test: checks must fail)")
    return parser


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = RunConfig(
            command=args.command,
            strategy=args.strategy,
            theta=parse_theta(args.theta),
            a=parse_vector(args.assign_a),
            b=parse_vector(args.assign_b),
            eta_start=args.eta_start,
            eta_stop=args.eta_stop,
            eta_step=args.eta_step,
            tolerance=args.tol,
            output_path=args.out,
        )
        if cfg.command == "sweep":
            return cmd_sweep(cfg)
        if cfg.command == "critical":
            return cmd_critical(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg, perturb_p3=args.perturb_p3)
        return cmd_floor(cfg)
    except UsageError as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
