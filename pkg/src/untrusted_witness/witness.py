"""Witnesses for the pure states sin(t)|00> + cos(t)|11>, and the honest assignment channel."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    I2,
    as_hermitian,
    bloch_operator,
    min_eigenvalue,
    partial_trace,
    pauli_assemble,
    pauli_expand,
    projector,
    trace_out,
)

STATE_PSD_TOL = 1e-8
VALIDITY_SLACK = 1e-12


@dataclass(frozen=True)
class Witness:
    """A two-qubit witness given by its Pauli coefficients; ``matrix`` is derived."""

    coeffs: np.ndarray
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (4, 4):
            raise ValueError(f"witness coefficients must have shape (4, 4), got {coeffs.shape}")
        coeffs.setflags(write=False)
        matrix = pauli_assemble(coeffs)
        matrix.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_matrix(cls, m) -> "Witness":
        return cls(pauli_expand(m))


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0 < theta <= np.pi / 4 + 1e-15):
        raise ValueError(f"theta must lie in (0, pi/4], got {theta!r}")
    return theta


def build_target_state(theta: float) -> np.ndarray:
    """Projector onto sin(theta)|00> + cos(theta)|11>."""
    theta = _check_theta(theta)
    psi = np.zeros(4, dtype=complex)
    psi[0] = np.sin(theta)
    psi[3] = np.cos(theta)
    return projector(psi)


def build_theta_witness(theta: float) -> Witness:
    """Witness ``cos^2(theta) 1 - |Psi_theta><Psi_theta|`` in Pauli form."""
    theta = _check_theta(theta)
    c2, s2 = np.cos(2 * theta), np.sin(2 * theta)
    w = np.zeros((4, 4))
    w[0, 0] = c2 / 2 + 0.25
    w[0, 3] = w[3, 0] = c2 / 4
    w[1, 1] = -s2 / 4
    w[2, 2] = s2 / 4
    w[3, 3] = -0.25
    return Witness(w)


def bell_witness() -> Witness:
    return build_theta_witness(np.pi / 4)


def check_state(rho, tol: float = STATE_PSD_TOL) -> np.ndarray:
    rho = as_hermitian(rho, dims=(4,))
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValueError(f"state must have unit trace, got {tr:.3e}")
    lam = min_eigenvalue(rho)
    if lam < -tol:
        raise ValueError(f"state is not positive semidefinite (min eigenvalue {lam:.3e})")
    return rho


def expectation(witness: Witness, rho) -> float:
    rho = check_state(rho)
    return float(np.trace(witness.matrix @ rho).real)


def check_eta(eta: float) -> float:
    eta = float(eta)
    if not 0 <= eta <= 1:
        raise ValueError(f"detection efficiency must lie in [0, 1], got {eta!r}")
    return eta


def assignment_channel(rho, a, b, eta: float) -> np.ndarray:
    """State seen after both parties substitute assigned outcomes for no-clicks.

    Validity of ``a`` and ``b`` is not enforced; invalid assignments are a
    legitimate object of study.
    """
    eta = check_eta(eta)
    rho = as_hermitian(rho, dims=(4,))
    alpha, beta = bloch_operator(a), bloch_operator(b)
    rho_a = partial_trace(rho, "A")
    rho_b = partial_trace(rho, "B")
    out = (
        eta**2 * rho
        + eta * (1 - eta) * np.kron(rho_a, beta)
        + (1 - eta) * eta * np.kron(alpha, rho_b)
        + (1 - eta) ** 2 * np.trace(rho) * np.kron(alpha, beta)
    )
    return (out + out.conj().T) / 2


def effective_witness(witness: Witness, a, b, eta: float) -> np.ndarray:
    """Adjoint of :func:`assignment_channel` applied to the witness.

    ``Tr[W_eff rho] == Tr[W channel(rho)]`` for every operator ``rho``.
    """
    eta = check_eta(eta)
    w = witness.matrix
    alpha, beta = bloch_operator(a), bloch_operator(b)
    w_alice = trace_out(w @ np.kron(I2, beta), "A")
    w_bob = trace_out(w @ np.kron(alpha, I2), "B")
    const = np.trace(w @ np.kron(alpha, beta)).real
    out = (
        eta**2 * w
        + eta * (1 - eta) * np.kron(w_alice, I2)
        + (1 - eta) * eta * np.kron(I2, w_bob)
        + (1 - eta) ** 2 * const * np.eye(4)
    )
    return (out + out.conj().T) / 2


def bell_assignment_value(a, b, eta: float) -> float:
    """Bell-witness value on the Bell state after the assignment channel."""
    eta = check_eta(eta)
    overlap = np.trace(bloch_operator(a).T @ bloch_operator(b)).real
    return float((1 - eta**2 - eta - (1 - eta) ** 2 * overlap) / 2)


def is_valid_assignment(a) -> bool:
    """True iff the assigned outcome statistics come from a qubit state (|a| <= 1)."""
    a = np.asarray(a, dtype=float)
    return bool(np.dot(a, a) <= 1 + VALIDITY_SLACK)
