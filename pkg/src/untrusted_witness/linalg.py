"""Two-qubit Hermitian operator algebra.

Operators are plain complex ``numpy`` arrays of shape (2, 2) or (4, 4). The
first tensor factor is Alice's qubit, the second Bob's. Pauli coefficients are
real (4, 4) arrays ``c`` with ``M = sum_ij c[i, j] sigma_i (x) sigma_j`` where
index 0 is the identity and 1, 2, 3 are sigma_x, sigma_y, sigma_z.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_GATE = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([I2, SX, SY, SZ])

# PAULI_PRODUCTS[i, j] = sigma_i (x) sigma_j
PAULI_PRODUCTS = np.einsum("iab,jcd->ijacbd", PAULIS, PAULIS).reshape(4, 4, 4, 4)


def as_hermitian(m, dims=(2, 4)) -> np.ndarray:
    """Validate ``m`` as Hermitian and return its exact symmetrization.

    Raises ``ValueError`` if the matrix is not square of an allowed size or if
    ``max|M - M^dagger|`` exceeds 1e-10.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in dims:
        raise ValueError(f"expected a square operator of size {dims}, got shape {m.shape}")
    residual = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if residual > HERMITIAN_GATE:
        raise ValueError(f"operator is not Hermitian (residual {residual:.3e})")
    return (m + m.conj().T) / 2


def pauli_expand(m) -> np.ndarray:
    """Real Pauli coefficients ``c[i, j] = Tr[M (sigma_i (x) sigma_j)] / 4``."""
    m = as_hermitian(m, dims=(4,))
    c = np.einsum("ijba,ab->ij", PAULI_PRODUCTS, m) / 4
    return c.real.copy()


def pauli_assemble(c) -> np.ndarray:
    """Inverse of :func:`pauli_expand`."""
    c = np.asarray(c, dtype=float)
    if c.shape != (4, 4):
        raise ValueError(f"Pauli coefficients must have shape (4, 4), got {c.shape}")
    m = np.einsum("ij,ijab->ab", c, PAULI_PRODUCTS)
    return (m + m.conj().T) / 2


def bloch_operator(v) -> np.ndarray:
    """Single-qubit operator ``(1 + v . sigma) / 2``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {v.shape}")
    return (I2 + np.einsum("k,kab->ab", v, PAULIS[1:])) / 2


def tensor(a, b) -> np.ndarray:
    """Kronecker product with ``a`` on Alice's qubit."""
    return np.kron(as_hermitian(a, dims=(2,)), as_hermitian(b, dims=(2,)))


def partial_trace(m, keep: str) -> np.ndarray:
    """Reduced operator on subsystem ``keep`` ("A" or "B")."""
    return trace_out(as_hermitian(m, dims=(4,)), keep)


def trace_out(m, keep: str) -> np.ndarray:
    """Partial trace of an arbitrary (not necessarily Hermitian) 4x4 matrix."""
    m = np.asarray(m, dtype=complex).reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("ajbj->ab", m)
    if keep == "B":
        return np.einsum("iaib->ab", m)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def partial_transpose(m, on: str = "A") -> np.ndarray:
    """Partial transpose on subsystem ``on`` ("A" or "B")."""
    m = as_hermitian(m, dims=(4,)).reshape(2, 2, 2, 2)
    if on == "A":
        out = m.transpose(2, 1, 0, 3)
    elif on == "B":
        out = m.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"on must be 'A' or 'B', got {on!r}")
    return out.reshape(4, 4)


def real_embedding(m) -> np.ndarray:
    """Real symmetric image ``[[Re, -Im], [Im, Re]]`` of a Hermitian matrix.

    Each eigenvalue of ``m`` appears twice in the spectrum of the embedding.
    """
    m = np.asarray(m, dtype=complex)
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def eigenvalues(m) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian operator, via its real embedding."""
    m = as_hermitian(m)
    doubled = np.linalg.eigvalsh(real_embedding(m))
    return doubled[::2]


def min_eigenvalue(m) -> float:
    return float(eigenvalues(m)[0])


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex)
    return v / np.linalg.norm(v)


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())
