import numpy as np
import pytest

from untrusted_witness.linalg import (
    bloch_operator,
    min_eigenvalue,
    partial_transpose,
    pauli_assemble,
)
from untrusted_witness.witness import (
    Witness,
    assignment_channel,
    bell_assignment_value,
    bell_witness,
    build_target_state,
    build_theta_witness,
    check_state,
    effective_witness,
    expectation,
    is_valid_assignment,
)

from conftest import random_bloch, random_product_mixture, random_state

BELL = build_target_state(np.pi / 4)
MIXED = np.eye(4) / 4


def test_bell_witness_coefficients():
    expected = np.diag([0.25, -0.25, 0.25, -0.25])
    np.testing.assert_allclose(bell_witness().coeffs, expected, atol=1e-16)


@pytest.mark.parametrize("theta", [np.pi / 4, np.pi / 5, np.pi / 6, 0.1])
def test_witness_matrix_matches_definition(theta):
    w = build_theta_witness(theta)
    expected = np.cos(theta) ** 2 * np.eye(4) - build_target_state(theta)
    np.testing.assert_allclose(w.matrix, expected, atol=1e-15)
    np.testing.assert_allclose(w.matrix, pauli_assemble(w.coeffs), atol=1e-12)
    assert expectation(w, build_target_state(theta)) == pytest.approx(np.cos(theta) ** 2 - 1, abs=1e-12)


def test_witness_is_immutable():
    w = bell_witness()
    with pytest.raises(ValueError):
        w.coeffs[0, 0] = 1.0
    assert Witness.from_matrix(w.matrix).coeffs == pytest.approx(w.coeffs)


@pytest.mark.parametrize("theta", [0.0, -0.1, np.pi / 4 + 0.01])
def test_theta_out_of_range(theta):
    with pytest.raises(ValueError, match="theta"):
        build_theta_witness(theta)


def test_target_state_schmidt_coefficients():
    psi = build_target_state(np.pi / 6)
    np.testing.assert_allclose(np.diag(psi).real, [0.25, 0, 0, 0.75], atol=1e-15)
    small = build_target_state(1e-4)
    assert min_eigenvalue(partial_transpose(small)) > -2e-4
    assert min_eigenvalue(partial_transpose(BELL)) == pytest.approx(-0.5)


def test_expectation_examples():
    w = bell_witness()
    assert expectation(w, MIXED) == pytest.approx(0.25)
    assert expectation(w, BELL) == pytest.approx(-0.5)
    zero_zero = np.diag([1.0, 0, 0, 0])
    assert expectation(w, zero_zero) == pytest.approx(0.0, abs=1e-15)
    assert expectation(build_theta_witness(np.pi / 6), build_target_state(np.pi / 6)) == pytest.approx(-0.25)


def test_check_state_rejects_bad_inputs():
    with pytest.raises(ValueError, match="trace"):
        check_state(np.eye(4))
    with pytest.raises(ValueError, match="semidefinite"):
        check_state(np.diag([1.5, -0.5, 0, 0]))


def test_channel_limits(rng):
    rho = random_state(rng)
    a, b = random_bloch(rng), random_bloch(rng)
    np.testing.assert_allclose(assignment_channel(rho, a, b, 1.0), rho, atol=1e-15)
    np.testing.assert_allclose(
        assignment_channel(rho, a, b, 0.0), np.kron(bloch_operator(a), bloch_operator(b)), atol=1e-15
    )
    with pytest.raises(ValueError):
        assignment_channel(rho, a, b, 1.5)


def test_channel_on_bell_state_half_efficiency():
    out = assignment_channel(BELL, (0, 0, 0), (0, 0, 0), 0.5)
    assert expectation(bell_witness(), out) == pytest.approx(1 / 16, abs=1e-15)


def test_effective_witness_limits():
    w = bell_witness()
    np.testing.assert_allclose(effective_witness(w, (0.3, 0, 0), (0, 0.2, 0), 1.0), w.matrix, atol=1e-15)
    for eta in np.linspace(0, 1, 11):
        w_eff = effective_witness(w, (0, 0, 0), (0, 0, 0), eta)
        assert min_eigenvalue(w_eff) == pytest.approx(0.25 - 0.75 * eta**2, abs=1e-12)
        assert np.trace(w_eff @ BELL).real == pytest.approx(0.25 - 0.75 * eta**2, abs=1e-12)


def test_channel_adjoint_consistency(rng):
    worst = 0.0
    for _ in range(1000):
        theta = rng.uniform(0.01, np.pi / 4)
        w = build_theta_witness(theta)
        rho = random_state(rng)
        # assignments need not be valid for the identity to hold
        a, b = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        eta = rng.uniform()
        lhs = np.trace(effective_witness(w, a, b, eta) @ rho).real
        rhs = np.trace(w.matrix @ assignment_channel(rho, a, b, eta)).real
        worst = max(worst, abs(lhs - rhs))
    assert worst <= 1e-10


def test_valid_assignment_preserves_ppt(rng):
    worst = np.inf
    for _ in range(1000):
        rho = random_product_mixture(rng)
        out = assignment_channel(rho, random_bloch(rng), random_bloch(rng), rng.uniform())
        worst = min(worst, min_eigenvalue(partial_transpose(out)))
    assert worst >= -1e-10


def test_bell_assignment_value_examples():
    for eta in np.linspace(0, 1, 21):
        assert bell_assignment_value((1, 0, 0), (1, 0, 0), eta) == pytest.approx(eta * (1 - 2 * eta) / 2, abs=1e-15)
        assert bell_assignment_value((0, 0, 0), (0, 0, 0), eta) == pytest.approx(0.25 - 0.75 * eta**2, abs=1e-15)
    assert bell_assignment_value((0.3, -0.2, 0.9), (1, 1, 1), 1.0) == pytest.approx(-0.5)


def test_bell_assignment_value_matches_channel(rng):
    for _ in range(100):
        a, b, eta = random_bloch(rng), random_bloch(rng), rng.uniform()
        out = assignment_channel(BELL, a, b, eta)
        assert bell_assignment_value(a, b, eta) == pytest.approx(expectation(bell_witness(), out), abs=1e-12)


def test_is_valid_assignment():
    assert is_valid_assignment((0, 0, 0))
    assert is_valid_assignment((1, 0, 0))
    assert not is_valid_assignment((1, 1, 1))
    assert not is_valid_assignment((0.8, 0.7, 0))
