"""Critical detection efficiency by bisection on the detection margin.

Entanglement is detectable at ``eta`` when the worst-case separable value
exceeds the best value an entangled source can produce. For the discard
strategy honest losses cancel, so the entangled reference is the witness on
its target state. For the assignment strategy it is the smallest eigenvalue of
the effective witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import min_eigenvalue
from .model import ASSIGNMENT, DISCARD, build_program
from .solver import SolveReport, solve
from .witness import Witness, build_target_state, effective_witness, expectation

SOLVER_TOL = 1e-6
DETECTION_GATE = 2 * SOLVER_TOL
DEFAULT_BRACKET = (0.3, 1.0)
DEFAULT_TOL = 1e-4
MAX_BISECTIONS = 60


class NoCriticalPoint(ValueError):
    pass


class MonotonicityError(RuntimeError):
    pass


class SolverFailure(RuntimeError):
    def __init__(self, eta: float, report: SolveReport):
        super().__init__(f"solver returned {report.status} at eta={eta}")
        self.eta = eta
        self.report = report


@dataclass(frozen=True)
class CurvePoint:
    eta: float
    separable_min: float
    entangled_value: float

    @property
    def margin(self) -> float:
        return self.separable_min - self.entangled_value


@dataclass(frozen=True)
class CriticalResult:
    eta_crit: float
    bracket: tuple[float, float]
    iterations: int
    curve: list[CurvePoint] = field(default_factory=list)
    margin: float = float("nan")  # separable_min - entangled_value at eta_crit


def entangled_value(witness: Witness, strategy: str, eta: float, a=None, b=None, theta=None) -> float:
    if strategy == DISCARD:
        if theta is None:
            raise ValueError("the discard reference value needs the target state's theta")
        return expectation(witness, build_target_state(theta))
    if strategy == ASSIGNMENT:
        a = (0, 0, 0) if a is None else a
        b = (0, 0, 0) if b is None else b
        return min_eigenvalue(effective_witness(witness, a, b, eta))
    raise ValueError(f"unknown strategy {strategy!r}")


def separable_min(witness: Witness, strategy: str, eta: float, a=None, b=None) -> SolveReport:
    return solve(build_program(witness, eta, strategy, a, b))


def probe(witness: Witness, strategy: str, eta: float, a=None, b=None, theta=None) -> CurvePoint:
    report = separable_min(witness, strategy, eta, a, b)
    if not report.ok:
        raise SolverFailure(eta, report)
    return CurvePoint(eta, report.optimum, entangled_value(witness, strategy, eta, a, b, theta))


def _check_monotone(curve: list[CurvePoint], gate: float) -> None:
    pts = sorted(curve, key=lambda p: p.eta)
    for lo, hi in zip(pts, pts[1:]):
        if hi.margin < lo.margin - gate:
            raise MonotonicityError(
                f"detection margin decreases from {lo.margin:.3e} at eta={lo.eta:.6g} "
                f"to {hi.margin:.3e} at eta={hi.eta:.6g}"
            )


def find_critical_eta(
    witness: Witness,
    strategy: str,
    theta=None,
    a=None,
    b=None,
    tol: float = DEFAULT_TOL,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
    gate: float = DETECTION_GATE,
    max_iter: int = MAX_BISECTIONS,
) -> CriticalResult:
    """Bisect for the efficiency below which detection becomes impossible.

    ``hi`` always satisfies ``margin > gate`` and ``lo`` satisfies
    ``margin <= gate``. Every probe is recorded in ``curve``.
    """
    if tol < 1e-6:
        raise ValueError(f"tolerance must be at least 1e-6, got {tol}")
    lo, hi = (float(v) for v in bracket)
    if not 0 <= lo < hi <= 1:
        raise ValueError(f"bracket must satisfy 0 <= lo < hi <= 1, got {bracket}")

    curve = [probe(witness, strategy, eta, a, b, theta) for eta in (lo, hi)]
    if curve[1].margin <= gate or curve[0].margin > gate:
        raise NoCriticalPoint(
            f"no critical point in bracket [{lo}, {hi}]: margins "
            f"{curve[0].margin:.3e} and {curve[1].margin:.3e} (gate {gate:.1e})"
        )
    iterations = 0
    while hi - lo > tol and iterations < max_iter:
        mid = (lo + hi) / 2
        point = probe(witness, strategy, mid, a, b, theta)
        curve.append(point)
        _check_monotone(curve, gate)
        if point.margin > gate:
            hi = mid
        else:
            lo = mid
        iterations += 1
    eta_crit = (lo + hi) / 2
    final = probe(witness, strategy, eta_crit, a, b, theta)
    curve.append(final)
    _check_monotone(curve, gate)
    return CriticalResult(eta_crit, (lo, hi), iterations, curve, final.margin)


def bell_critical_eta() -> float:
    return float(1 / np.sqrt(3))
