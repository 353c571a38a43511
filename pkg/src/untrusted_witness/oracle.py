"""Closed-form optima and explicit optimal attacks for the Bell witness.

The attack distributes weight over a handful of click patterns, each carrying
either the maximally mixed state or one of three classically correlated
states. Five weights ``p0..p4`` parametrize it; they take one of three closed
forms depending on the efficiency range.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import N_PATTERNS, pattern_code
from .linalg import ket, min_eigenvalue, partial_transpose, projector
from .model import (
    ASSIGNMENT,
    DISCARD,
    EQUALITY_TOL,
    ConicProgram,
    ensemble_to_vector,
)

ETA_THIRD = 1 / 3
ETA_BELL = 1 / np.sqrt(3)
# Critical efficiency of a detection-loophole-free Bell test on the Bell state
# (Garg-Mermin); quoted for comparison only.
BELL_TEST_CRITICAL_ETA = 0.83

PARAM_SLACK = 1e-14

HIGH, MIDDLE, LOW = "high", "middle", "low"


def _correlated_state(ket_pairs) -> np.ndarray:
    return sum(projector(np.kron(u, v)) for u, v in ket_pairs) / len(ket_pairs)


_plus, _minus = ket(1, 1), ket(1, -1)
_plus_i, _minus_i = ket(1, 1j), ket(1, -1j)
_zero, _one = ket(1, 0), ket(0, 1)

# equal mixtures of two product states, perfectly (anti)correlated along one axis
RHO_XX = _correlated_state([(_plus, _plus), (_minus, _minus)])
RHO_YY = _correlated_state([(_plus_i, _minus_i), (_minus_i, _plus_i)])
RHO_ZZ = _correlated_state([(_zero, _zero), (_one, _one)])
MIXED = np.eye(4, dtype=complex) / 4

PATTERNS_P0 = [(0, 0, 0, 0, 0, 0)]
PATTERNS_P1 = [(1, 1, 1, 1, 1, 1)]
PATTERNS_P2 = {
    "xx": [(1, 0, 0, 1, 0, 0), (1, 0, 1, 1, 1, 0), (1, 1, 0, 1, 0, 1)],
    "yy": [(0, 1, 0, 0, 1, 0), (0, 1, 1, 1, 1, 0), (1, 1, 0, 0, 1, 1)],
    "zz": [(0, 0, 1, 0, 0, 1), (0, 1, 1, 1, 0, 1), (1, 0, 1, 0, 1, 1)],
}
PATTERNS_P3 = {
    "xx": [(1, 0, 0, 1, 1, 1), (1, 1, 1, 1, 0, 0)],
    "yy": [(0, 1, 0, 1, 1, 1), (1, 1, 1, 0, 1, 0)],
    "zz": [(0, 0, 1, 1, 1, 1), (1, 1, 1, 0, 0, 1)],
}
PATTERNS_P4 = [tuple(int(k == m) for k in range(6)) for m in range(6)]
CORRELATED = {"xx": RHO_XX, "yy": RHO_YY, "zz": RHO_ZZ}


@dataclass(frozen=True)
class AppendixParams:
    eta: float
    branch: str
    p0: float
    p1: float
    p2: float
    p3: float
    p4: float

    def as_tuple(self) -> tuple[float, ...]:
        return (self.p0, self.p1, self.p2, self.p3, self.p4)

    def constraint_residuals(self) -> tuple[float, float, float]:
        """Residuals of the single-click, double-click and normalization conditions."""
        p0, p1, p2, p3, p4 = self.as_tuple()
        eta = self.eta
        return (
            p1 + 5 * p2 + 4 * p3 + p4 - eta,
            p1 + 3 * p2 + 2 * p3 - eta**2,
            p0 + p1 + 9 * p2 + 6 * p3 + 6 * p4 - 1,
        )

    @property
    def correlation_weight(self) -> float:
        """``p1 + 9 p2 + 6 p3``: total weight of the correlation terms."""
        return self.p1 + 9 * self.p2 + 6 * self.p3


def branch_of(eta: float) -> str:
    if eta > ETA_BELL:
        return HIGH
    if eta > ETA_THIRD:
        return MIDDLE
    return LOW


def appendix_params(eta: float, branch: str | None = None) -> AppendixParams:
    """Weights of the optimal attack; ``branch`` defaults to the one valid at ``eta``.

    Raises ``ValueError`` if a forced branch yields negative weights.
    """
    eta = float(eta)
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    branch = branch_of(eta) if branch is None else branch
    if branch == HIGH:
        ps = (0.0, (3 * eta**2 - 1) / 2, (1 - eta) ** 2 / 2, (1 - eta) * (2 * eta - 1) / 2, 0.0)
    elif branch == MIDDLE:
        ps = (0.0, 0.0, (1 - 3 * eta) ** 2 / 6, (6 * eta - 1 - 7 * eta**2) / 4, (1 - 3 * eta**2) / 6)
    elif branch == LOW:
        ps = ((1 - 3 * eta) ** 2, 0.0, 0.0, eta**2 / 2, eta - 2 * eta**2)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    negative = {f"p{k}": v for k, v in enumerate(ps) if v < -PARAM_SLACK}
    if negative:
        listing = ", ".join(f"{k}={v:.3e}" for k, v in negative.items())
        raise ValueError(
            f"branch {branch!r} is invalid at eta={eta}: negative weights {listing} "
            f"(valid branch here: {branch_of(eta)!r})"
        )
    ps = tuple(max(v, 0.0) for v in ps)
    return AppendixParams(eta, branch, *ps)


def ensemble_from_params(params: AppendixParams) -> np.ndarray:
    ens = np.zeros((N_PATTERNS, 4, 4), dtype=complex)

    def put(patterns, rho):
        for bits in patterns:
            ens[pattern_code(bits)] = rho

    put(PATTERNS_P0, params.p0 * MIXED)
    put(PATTERNS_P1, params.p1 * (RHO_XX + RHO_YY + RHO_ZZ) / 3)
    for axis, rho in CORRELATED.items():
        put(PATTERNS_P2[axis], params.p2 * rho)
        put(PATTERNS_P3[axis], params.p3 * rho)
    put(PATTERNS_P4, params.p4 * MIXED)
    return ens


def build_appendix_ensemble(eta: float, strategy: str = DISCARD) -> np.ndarray:
    """Optimal Bell-witness attack; the same ensemble serves both strategies
    (for the assignment strategy only with zero assignments)."""
    if strategy not in (DISCARD, ASSIGNMENT, "assignment_zero"):
        raise ValueError(f"unknown strategy {strategy!r}")
    return ensemble_from_params(appendix_params(eta))


def discard_bell_min(eta: float) -> float:
    eta = float(eta)
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    if eta > ETA_BELL:
        return 0.25 - 0.25 / eta**2
    return -0.5


def assignment_bell_min_zero(eta: float) -> float:
    """Bell-witness minimum for the assignment strategy with a = b = 0."""
    eta = float(eta)
    if not 0 <= eta <= 1:
        raise ValueError(f"eta must lie in [0, 1], got {eta!r}")
    if eta > ETA_BELL:
        return 0.0
    return 0.25 - 0.75 * eta**2


def closed_form_objective(params: AppendixParams, strategy: str) -> float:
    """Bell-witness objective of :func:`ensemble_from_params` from its weights alone."""
    if strategy == DISCARD:
        return 0.25 - params.correlation_weight / (4 * params.eta**2)
    return 0.25 - params.correlation_weight / 4


def bell_closed_form(eta: float, strategy: str) -> float:
    return discard_bell_min(eta) if strategy == DISCARD else assignment_bell_min_zero(eta)


def necessity_extremal_value(a) -> float:
    """``max_rho Tr[alpha^T rho]`` over single-qubit states.

    With Alice's detector dead and Bob's perfect, a separable state passes the
    Bell witness only if this is at most 1. It exceeds 1 exactly when the
    assignment vector is longer than 1.
    """
    a = np.asarray(a, dtype=float)
    return float((1 + np.linalg.norm(a)) / 2)


@dataclass(frozen=True)
class FeasibilityReport:
    max_equality_residual: float
    equality_residuals: dict[str, float]
    min_state_eigenvalue: float
    min_pt_eigenvalue: float
    min_observed_eigenvalue: float
    objective: float

    @property
    def min_block_eigenvalue(self) -> float:
        return min(self.min_state_eigenvalue, self.min_pt_eigenvalue, self.min_observed_eigenvalue)

    def is_feasible(self, eq_tol: float = EQUALITY_TOL, psd_tol: float = 1e-7) -> bool:
        return self.max_equality_residual <= eq_tol and self.min_block_eigenvalue >= -psd_tol


def verify_feasibility(ens, program: ConicProgram) -> FeasibilityReport:
    """Residuals of ``ens`` against every constraint of ``program``.

    Eigenvalues are computed on the operators themselves (the partial
    transpose by index permutation), not through the program's block maps.
    """
    ens = np.asarray(ens, dtype=complex)
    x = ensemble_to_vector(ens)
    res = program.equality_residuals(x)
    residuals = dict(zip(program.eq_labels, res.tolist()))
    state_min = min(min_eigenvalue(r) for r in ens)
    pt_min = min(min_eigenvalue(partial_transpose(r, "A")) for r in ens)
    obs = program.blocks_of_kind("observed")
    obs_min = min_eigenvalue(obs[0].matrix(x)) if obs else np.inf
    return FeasibilityReport(
        max_equality_residual=float(np.max(np.abs(res))),
        equality_residuals=residuals,
        min_state_eigenvalue=float(state_min),
        min_pt_eigenvalue=float(pt_min),
        min_observed_eigenvalue=float(obs_min),
        objective=program.objective_value(x),
    )


def exact_certificate(eta: Fraction) -> dict[str, bool]:
    """Exact rational check of the attack at a rational efficiency.

    Every non-zero ``rho_lambda`` is a non-negative mixture of product pure
    states, so positivity and PPT reduce to the weights being non-negative.
    The observed state equals ``(1 - t) 1/4 + t |Psi_bell><Psi_bell|`` with
    ``t = (p1/3 + 3 p2 + 2 p3) / eta^2``, which is PSD iff ``0 <= t <= 1``.
    """
    eta = Fraction(eta)
    if not 0 < eta <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    # rational efficiencies never equal 1/sqrt(3); compare squares exactly
    if 3 * eta**2 > 1:
        branch = HIGH
        ps = (Fraction(0), (3 * eta**2 - 1) / 2, (1 - eta) ** 2 / 2, (1 - eta) * (2 * eta - 1) / 2, Fraction(0))
    elif eta > Fraction(1, 3):
        branch = MIDDLE
        ps = (Fraction(0), Fraction(0), (1 - 3 * eta) ** 2 / 6, (6 * eta - 1 - 7 * eta**2) / 4, (1 - 3 * eta**2) / 6)
    else:
        branch = LOW
        ps = ((1 - 3 * eta) ** 2, Fraction(0), Fraction(0), eta**2 / 2, eta - 2 * eta**2)
    p0, p1, p2, p3, p4 = ps
    t = (p1 / 3 + 3 * p2 + 2 * p3) / eta**2
    weight = p1 + 9 * p2 + 6 * p3
    closed = (Fraction(1, 4) - Fraction(1, 4) / eta**2) if branch == HIGH else Fraction(-1, 2)
    closed_assign = Fraction(0) if branch == HIGH else Fraction(1, 4) - Fraction(3, 4) * eta**2
    return {
        "weights_nonnegative": all(p >= 0 for p in ps),
        "single_click": p1 + 5 * p2 + 4 * p3 + p4 == eta,
        "double_click": p1 + 3 * p2 + 2 * p3 == eta**2,
        "normalization": p0 + p1 + 9 * p2 + 6 * p3 + 6 * p4 == 1,
        "observed_psd": 0 <= t <= 1,
        "discard_objective": Fraction(1, 4) - weight / (4 * eta**2) == closed,
        "assignment_objective": Fraction(1, 4) - weight / 4 == closed_assign,
    }
