import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from untrusted_witness.linalg import (
    I2,
    PAULI_PRODUCTS,
    SX,
    SY,
    SZ,
    bloch_operator,
    eigenvalues,
    ket,
    min_eigenvalue,
    partial_trace,
    partial_transpose,
    pauli_assemble,
    pauli_expand,
    projector,
    real_embedding,
    tensor,
)
from untrusted_witness.witness import bell_witness, build_target_state, build_theta_witness

from conftest import random_bloch, random_state

BELL = build_target_state(np.pi / 4)
finite = st.floats(-5, 5, allow_nan=False)


def test_pauli_products_are_kronecker_products():
    for i, a in enumerate((I2, SX, SY, SZ)):
        for j, b in enumerate((I2, SX, SY, SZ)):
            np.testing.assert_allclose(PAULI_PRODUCTS[i, j], np.kron(a, b))


def test_expand_identity():
    c = pauli_expand(np.eye(4))
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    np.testing.assert_allclose(c, expected, atol=1e-15)


def test_expand_bell_state():
    expected = np.diag([0.25, 0.25, -0.25, 0.25])
    np.testing.assert_allclose(pauli_expand(BELL), expected, atol=1e-15)


def test_expand_bell_witness():
    expected = np.diag([0.25, -0.25, 0.25, -0.25])
    np.testing.assert_allclose(pauli_expand(bell_witness().matrix), expected, atol=1e-15)


def test_assemble_zz():
    c = np.zeros((4, 4))
    c[3, 3] = 1
    np.testing.assert_allclose(pauli_assemble(c), np.diag([1, -1, -1, 1]))


def test_assemble_theta_witness_coefficients():
    theta = np.pi / 6
    c = np.zeros((4, 4))
    c[0, 0] = 0.5
    c[0, 3] = c[3, 0] = 1 / 8
    c[1, 1] = -np.sin(np.pi / 3) / 4
    c[2, 2] = np.sin(np.pi / 3) / 4
    c[3, 3] = -0.25
    expected = np.cos(theta) ** 2 * np.eye(4) - build_target_state(theta)
    np.testing.assert_allclose(pauli_assemble(c), expected, atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=16, max_size=16))
def test_expand_assemble_round_trip(values):
    c = np.array(values).reshape(4, 4)
    m = pauli_assemble(c)
    np.testing.assert_allclose(pauli_expand(m), c, atol=1e-12)
    np.testing.assert_allclose(pauli_assemble(pauli_expand(m)), m, atol=1e-12)


def test_expand_rejects_non_hermitian():
    m = np.zeros((4, 4))
    m[0, 1] = 1
    with pytest.raises(ValueError, match="Hermitian"):
        pauli_expand(m)
    with pytest.raises(ValueError, match="shape"):
        pauli_expand(np.eye(2))


def test_tensor_examples():
    np.testing.assert_allclose(tensor(I2, I2), np.eye(4))
    np.testing.assert_allclose(tensor(SZ, SZ), np.diag([1, -1, -1, 1]))
    alpha = bloch_operator([1, 0, 0])
    prod = tensor(alpha, alpha)
    np.testing.assert_allclose(prod, np.kron((I2 + SX) / 2, (I2 + SX) / 2))
    assert np.trace(prod).real == pytest.approx(1)


def test_partial_trace_examples():
    np.testing.assert_allclose(partial_trace(BELL, "A"), I2 / 2, atol=1e-15)
    np.testing.assert_allclose(
        partial_trace(build_target_state(np.pi / 6), "A"), np.diag([0.25, 0.75]), atol=1e-15
    )


def test_partial_trace_of_product(rng):
    x = bloch_operator(random_bloch(rng))
    y = 2.5 * bloch_operator(random_bloch(rng))
    np.testing.assert_allclose(partial_trace(np.kron(x, y), "A"), np.trace(y) * x, atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(x, y), "B"), np.trace(x) * y, atol=1e-14)
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), "C")


def test_partial_transpose_examples():
    np.testing.assert_allclose(partial_transpose(np.eye(4)), np.eye(4))
    assert min_eigenvalue(partial_transpose(BELL, "A")) == pytest.approx(-0.5, abs=1e-14)
    assert min_eigenvalue(partial_transpose(BELL, "B")) == pytest.approx(-0.5, abs=1e-14)


def test_partial_transpose_flips_sigma_y_sign(rng):
    rho = random_state(rng)
    c = pauli_expand(rho)
    np.testing.assert_allclose(pauli_expand(partial_transpose(rho, "A")), c * [[1], [1], [-1], [1]], atol=1e-14)
    np.testing.assert_allclose(pauli_expand(partial_transpose(rho, "B")), c * [1, 1, -1, 1], atol=1e-14)


def test_product_states_stay_ppt(rng):
    worst = np.inf
    for _ in range(10_000):
        rho = np.kron(bloch_operator(random_bloch(rng)), bloch_operator(random_bloch(rng)))
        worst = min(worst, min_eigenvalue(partial_transpose(rho)))
    assert worst >= -1e-12


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(4)) == pytest.approx(1)
    assert min_eigenvalue(bell_witness().matrix) == pytest.approx(-0.5, abs=1e-14)
    assert min_eigenvalue(np.kron(SZ, SZ)) == pytest.approx(-1)
    assert min_eigenvalue(build_theta_witness(np.pi / 6).matrix) == pytest.approx(np.cos(np.pi / 6) ** 2 - 1)


def test_real_embedding_doubles_spectrum(rng):
    for _ in range(50):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = g + g.conj().T
        emb = real_embedding(h)
        np.testing.assert_allclose(emb, emb.T)
        doubled = np.linalg.eigvalsh(emb)
        np.testing.assert_allclose(doubled[::2], doubled[1::2], atol=1e-10)
        np.testing.assert_allclose(eigenvalues(h), np.linalg.eigvalsh(h), atol=1e-10)


def test_ket_and_projector():
    v = ket(1, 1j)
    np.testing.assert_allclose(np.linalg.norm(v), 1)
    p = projector(v)
    np.testing.assert_allclose(p @ p, p, atol=1e-15)
    np.testing.assert_allclose(p, (I2 + SY) / 2, atol=1e-15)
