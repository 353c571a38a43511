"""Conic programs for the worst-case witness value under untrusted detectors.

The decision variables are the 64 unnormalized operators ``rho_lambda``, one
per click pattern. Each is stored through its 16 real Pauli expectations
``x[lambda, i, j] = Tr[rho_lambda (sigma_i (x) sigma_j)]`` so that
``rho_lambda = sum_ij x[lambda, i, j] sigma_i (x) sigma_j / 4``. Every PSD block
of the program (the states, their partial transposes and the observed state)
is an affine image of this vector.

Block order is fixed: the 64 state blocks by ascending pattern code, then the
64 partial-transpose blocks in the same order, then the observed-state block.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TextIO

import numpy as np
import scipy.sparse as sp

from .lattice import N_PATTERNS, N_SETTINGS, LambdaSets, lambda_sets, pattern_bits
from .linalg import PAULI_PRODUCTS, real_embedding
from .witness import Witness, check_eta

N_COORDS = 16
N_VARS = N_PATTERNS * N_COORDS
CLICK_RATE_TOL = 1e-6
EQUALITY_TOL = 1e-6

DISCARD = "discard"
ASSIGNMENT = "assignment"
STRATEGIES = (DISCARD, ASSIGNMENT)

# sigma_y^T = -sigma_y, every other Pauli is symmetric
_PT_SIGN = np.array([1.0, 1.0, -1.0, 1.0])


def var_index(pattern: int, i: int, j: int) -> int:
    return pattern * N_COORDS + 4 * i + j


def _n_local(i: int, j: int) -> int:
    return int(i > 0) + int(j > 0)


@dataclass(frozen=True)
class PsdBlock:
    """A 4x4 Hermitian PSD constraint ``M(x) >= 0``.

    The Pauli coordinates of ``M(x)`` are ``coord_map @ x + coord_offset``.
    """

    label: str
    kind: str  # "state", "pt" or "observed"
    pattern: int | None
    coord_map: sp.csr_matrix
    coord_offset: np.ndarray
    size: int = 4

    def coords(self, x) -> np.ndarray:
        return self.coord_map @ np.asarray(x, dtype=float) + self.coord_offset

    def matrix(self, x) -> np.ndarray:
        c = self.coords(x).reshape(4, 4)
        return np.einsum("ij,ijab->ab", c, PAULI_PRODUCTS) / 4


@dataclass(frozen=True)
class ConicProgram:
    """``minimize objective @ x + objective_constant`` subject to the
    equalities ``eq_matrix @ x == eq_rhs`` and every PSD block."""

    strategy: str
    eta: float
    witness: Witness
    objective: np.ndarray
    objective_constant: float
    eq_matrix: sp.csr_matrix
    eq_rhs: np.ndarray
    eq_labels: tuple[str, ...]
    blocks: tuple[PsdBlock, ...]
    a: tuple[float, float, float] | None = None
    b: tuple[float, float, float] | None = None
    degenerate: bool = False
    n_vars: int = field(default=N_VARS)

    def objective_value(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=float) + self.objective_constant)

    def equality_residuals(self, x) -> np.ndarray:
        return self.eq_matrix @ np.asarray(x, dtype=float) - self.eq_rhs

    def scaled(self, factor: float) -> "ConicProgram":
        """Same feasible set, objective multiplied by ``factor``."""
        return replace(
            self,
            objective=self.objective * factor,
            objective_constant=self.objective_constant * factor,
        )

    def blocks_of_kind(self, kind: str) -> list[PsdBlock]:
        return [blk for blk in self.blocks if blk.kind == kind]


# ---------------------------------------------------------------------------
# ensembles


def ensemble_to_vector(ens) -> np.ndarray:
    """Pauli expectations of each ``rho_lambda`` of a (64, 4, 4) ensemble."""
    ens = np.asarray(ens, dtype=complex)
    if ens.shape != (N_PATTERNS, 4, 4):
        raise ValueError(f"an ensemble has shape ({N_PATTERNS}, 4, 4), got {ens.shape}")
    x = np.einsum("ijba,lab->lij", PAULI_PRODUCTS, ens).real
    return x.reshape(N_VARS)


def vector_to_ensemble(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(N_PATTERNS, 4, 4)
    ens = np.einsum("lij,ijab->lab", x, PAULI_PRODUCTS) / 4
    return (ens + ens.conj().transpose(0, 2, 1)) / 2


def click_probability(pattern: int, eta: float) -> float:
    """Probability of ``pattern`` when every detector clicks independently with ``eta``."""
    bits = pattern_bits(pattern)
    ones = sum(bits)
    return eta**ones * (1 - eta) ** (len(bits) - ones)


def honest_ensemble(rho, eta: float) -> np.ndarray:
    """Ensemble of a source emitting ``rho`` with independent lossy detectors."""
    rho = np.asarray(rho, dtype=complex)
    q = np.array([click_probability(lam, eta) for lam in range(N_PATTERNS)])
    return q[:, None, None] * rho[None, :, :]


def click_rate_residuals(ens, eta: float) -> dict[str, float]:
    """Residuals of the click-rate and normalization equalities, keyed by label."""
    ens = np.asarray(ens, dtype=complex)
    tr = np.einsum("laa->l", ens).real
    sets = lambda_sets()
    out = {}
    for i in range(1, N_SETTINGS + 1):
        out[f"click:A{i}"] = tr[sets.alice[i]].sum() - eta
    for j in range(1, N_SETTINGS + 1):
        out[f"click:B{j}"] = tr[sets.bob[j]].sum() - eta
    for i in range(1, N_SETTINGS + 1):
        for j in range(1, N_SETTINGS + 1):
            out[f"click:A{i}B{j}"] = tr[sets.cell(i, j)].sum() - eta**2
    out["trace"] = tr.sum() - 1
    return out


def observed_state(ens, eta: float) -> np.ndarray:
    """Operator reconstructed from click-conditioned Pauli statistics.

    Raises ``ValueError`` naming every violated click-rate equality when the
    ensemble does not reproduce the nominal detection efficiency.
    """
    eta = float(eta)
    if not 0 < eta <= 1:
        raise ValueError(f"observed state needs eta in (0, 1], got {eta!r}")
    residuals = click_rate_residuals(ens, eta)
    bad = {k: v for k, v in residuals.items() if abs(v) > CLICK_RATE_TOL}
    if bad:
        listing = ", ".join(f"{k} ({v:+.3e})" for k, v in bad.items())
        raise ValueError(f"ensemble violates click rates at eta={eta}: {listing}")
    x = ensemble_to_vector(ens)
    return _observed_block(eta).matrix(x)


def witness_value(ens, witness: Witness, eta: float, strategy: str, a=None, b=None) -> float:
    """Post-processed witness value of an ensemble, summed pattern by pattern.

    Computed from the operators directly (traces against Pauli products and
    click bits) rather than from the program's objective vector, so it serves
    as an independent re-evaluation of solver output.
    """
    ens = np.asarray(ens, dtype=complex)
    w = witness.coeffs
    paulis = PAULI_PRODUCTS
    a = np.zeros(3) if a is None else np.asarray(a, dtype=float)
    b = np.zeros(3) if b is None else np.asarray(b, dtype=float)
    # raw[i][j]: post-processed (not yet efficiency-normalized) <sigma_i sigma_j>
    raw = np.zeros((4, 4))
    for lam in range(N_PATTERNS):
        rho = ens[lam]
        bits = pattern_bits(lam)
        ev = lambda i, j: np.trace(rho @ paulis[i, j]).real  # noqa: E731
        click_a = [True] + [bool(bits[s]) for s in range(N_SETTINGS)]
        click_b = [True] + [bool(bits[N_SETTINGS + s]) for s in range(N_SETTINGS)]
        for i in range(4):
            for j in range(4):
                if (i, j) == (0, 0):
                    continue
                if strategy == DISCARD:
                    if click_a[i] and click_b[j]:
                        raw[i, j] += ev(i, j)
                    continue
                # assignment: a missing click is replaced by the assigned bias
                ia, sa = (i, 1.0) if click_a[i] else (0, a[i - 1])
                jb, sb = (j, 1.0) if click_b[j] else (0, b[j - 1])
                raw[i, j] += sa * sb * ev(ia, jb)
    total = 0.0
    for i in range(4):
        for j in range(4):
            if (i, j) == (0, 0):
                total += w[0, 0]
            elif strategy == DISCARD:
                total += w[i, j] * raw[i, j] / eta ** _n_local(i, j)
            else:
                total += w[i, j] * raw[i, j]
    return float(total)


# ---------------------------------------------------------------------------
# program construction


def _state_block(lam: int) -> PsdBlock:
    rows = np.arange(N_COORDS)
    cols = lam * N_COORDS + rows
    m = sp.csr_matrix((np.ones(N_COORDS), (rows, cols)), shape=(N_COORDS, N_VARS))
    return PsdBlock(f"rho[{lam}]", "state", lam, m, np.zeros(N_COORDS))


def _pt_block(lam: int) -> PsdBlock:
    rows = np.arange(N_COORDS)
    cols = lam * N_COORDS + rows
    signs = np.repeat(_PT_SIGN, 4)
    m = sp.csr_matrix((signs, (rows, cols)), shape=(N_COORDS, N_VARS))
    return PsdBlock(f"rho[{lam}]^TA", "pt", lam, m, np.zeros(N_COORDS))


def _observed_block(eta: float) -> PsdBlock:
    sets = lambda_sets()
    rows, cols, vals = [], [], []
    for i in range(4):
        for j in range(4):
            if (i, j) == (0, 0):
                continue
            scale = eta ** -_n_local(i, j)
            for lam in np.flatnonzero(sets.cell(i, j)):
                rows.append(4 * i + j)
                cols.append(var_index(lam, i, j))
                vals.append(scale)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(N_COORDS, N_VARS))
    offset = np.zeros(N_COORDS)
    offset[0] = 1.0
    return PsdBlock("rho_observed", "observed", None, m, offset)


def _trace_row(mask) -> np.ndarray:
    row = np.zeros(N_VARS)
    for lam in np.flatnonzero(mask):
        row[var_index(lam, 0, 0)] = 1.0
    return row


def _click_equalities(eta: float, sets: LambdaSets):
    rows, rhs, labels = [], [], []
    for i in range(1, N_SETTINGS + 1):
        rows.append(_trace_row(sets.alice[i]))
        rhs.append(eta)
        labels.append(f"click:A{i}")
    for j in range(1, N_SETTINGS + 1):
        rows.append(_trace_row(sets.bob[j]))
        rhs.append(eta)
        labels.append(f"click:B{j}")
    for i in range(1, N_SETTINGS + 1):
        for j in range(1, N_SETTINGS + 1):
            rows.append(_trace_row(sets.cell(i, j)))
            rhs.append(eta**2)
            labels.append(f"click:A{i}B{j}")
    rows.append(_trace_row(np.ones(N_PATTERNS, dtype=bool)))
    rhs.append(1.0)
    labels.append("trace")
    return rows, rhs, labels


def _blocks(eta: float, with_observed: bool) -> tuple[PsdBlock, ...]:
    blocks = [_state_block(lam) for lam in range(N_PATTERNS)]
    blocks += [_pt_block(lam) for lam in range(N_PATTERNS)]
    if with_observed:
        blocks.append(_observed_block(eta))
    return tuple(blocks)


def build_discard_program(witness: Witness, eta: float) -> ConicProgram:
    """Minimal click-conditioned witness value over separable hidden-variable models."""
    eta = float(eta)
    if not 0 < eta <= 1:
        raise ValueError(f"discard strategy needs eta in (0, 1], got {eta!r}")
    sets = lambda_sets()
    w = witness.coeffs
    c = np.zeros(N_VARS)
    for i in range(4):
        for j in range(4):
            if (i, j) == (0, 0) or w[i, j] == 0:
                continue
            scale = w[i, j] / eta ** _n_local(i, j)
            for lam in np.flatnonzero(sets.cell(i, j)):
                c[var_index(lam, i, j)] += scale
    rows, rhs, labels = _click_equalities(eta, sets)
    return ConicProgram(
        strategy=DISCARD,
        eta=eta,
        witness=witness,
        objective=c,
        objective_constant=float(w[0, 0]),
        eq_matrix=sp.csr_matrix(np.array(rows)),
        eq_rhs=np.array(rhs),
        eq_labels=tuple(labels),
        blocks=_blocks(eta, with_observed=True),
    )


def _as_triple(v) -> tuple[float, float, float]:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"assignment vectors have 3 components, got shape {v.shape}")
    return tuple(float(t) for t in v)


def build_assignment_program(witness: Witness, a, b, eta: float) -> ConicProgram:
    """Minimal witness value when no-clicks are replaced by assigned outcomes.

    At ``eta == 0`` nothing ever clicks and the observed-state block is
    undefined; it is dropped and the program is flagged ``degenerate``. Its
    optimum is then ``Tr[W (alpha (x) beta)]``.
    """
    eta = check_eta(eta)
    a, b = _as_triple(a), _as_triple(b)
    av = np.concatenate([[1.0], a])
    bv = np.concatenate([[1.0], b])
    sets = lambda_sets()
    w = witness.coeffs
    c = np.zeros(N_VARS)

    def add(mask, i, j, weight):
        if weight == 0:
            return
        for lam in np.flatnonzero(mask):
            c[var_index(lam, i, j)] += weight

    for i in range(4):
        for j in range(4):
            if (i, j) == (0, 0) or w[i, j] == 0:
                continue
            wij = w[i, j]
            # cells where both, only Alice, only Bob, or neither detector clicks;
            # for i == 0 (j == 0) Alice (Bob) always "clicks"
            add(sets.cell(i, j), i, j, wij)
            if j > 0:
                add(sets.cell(i, j, True, False), i, 0, wij * bv[j])
            if i > 0:
                add(sets.cell(i, j, False, True), 0, j, wij * av[i])
            if i > 0 and j > 0:
                add(sets.cell(i, j, False, False), 0, 0, wij * av[i] * bv[j])

    rows, rhs, labels = _click_equalities(eta, sets)
    for i in range(1, N_SETTINGS + 1):
        for j in range(1, N_SETTINGS + 1):
            row = np.zeros(N_VARS)
            for lam in np.flatnonzero(sets.cell(i, j, True, False)):
                row[var_index(lam, i, 0)] += 1.0
            for lam in np.flatnonzero(sets.alice[i]):
                row[var_index(lam, i, 0)] -= 1 - eta
            rows.append(row)
            rhs.append(0.0)
            labels.append(f"marginal:A{i}|noclickB{j}")
    for i in range(1, N_SETTINGS + 1):
        for j in range(1, N_SETTINGS + 1):
            row = np.zeros(N_VARS)
            for lam in np.flatnonzero(sets.cell(i, j, False, True)):
                row[var_index(lam, 0, j)] += 1.0
            for lam in np.flatnonzero(sets.bob[j]):
                row[var_index(lam, 0, j)] -= 1 - eta
            rows.append(row)
            rhs.append(0.0)
            labels.append(f"marginal:B{j}|noclickA{i}")

    degenerate = eta == 0
    return ConicProgram(
        strategy=ASSIGNMENT,
        eta=eta,
        witness=witness,
        objective=c,
        objective_constant=float(w[0, 0]),
        eq_matrix=sp.csr_matrix(np.array(rows)),
        eq_rhs=np.array(rhs),
        eq_labels=tuple(labels),
        blocks=_blocks(eta, with_observed=not degenerate),
        a=a,
        b=b,
        degenerate=degenerate,
    )


def build_program(witness: Witness, eta: float, strategy: str, a=None, b=None) -> ConicProgram:
    if strategy == DISCARD:
        return build_discard_program(witness, eta)
    if strategy == ASSIGNMENT:
        return build_assignment_program(
            witness, (0, 0, 0) if a is None else a, (0, 0, 0) if b is None else b, eta
        )
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


# ---------------------------------------------------------------------------
# SDPA export


def _svec_pauli_basis() -> np.ndarray:
    """(16, 8, 8): real embedding of ``sigma_i (x) sigma_j / 4``."""
    return np.stack(
        [real_embedding(PAULI_PRODUCTS[i, j] / 4) for i in range(4) for j in range(4)]
    )


def write_sdpa(program: ConicProgram, out: TextIO) -> None:
    """Write ``program`` in SDPA sparse format.

    SDPA form: minimize ``c @ x`` s.t. ``sum_k x_k F_k - F_0 >= 0``. Each
    Hermitian block becomes one 8x8 real block (embedding ``[[Re, -Im],
    [Im, Re]]``) in the documented order; the equalities become a final
    diagonal block of ``2m`` entries holding ``A x - b >= 0`` and
    ``b - A x >= 0``. The objective constant is recorded in a comment.
    """
    basis = _svec_pauli_basis()
    n = program.n_vars
    m = len(program.eq_rhs)
    sizes = [2 * blk.size for blk in program.blocks] + [-2 * m]
    out.write(f'"strategy={program.strategy} eta={program.eta!r} '
              f'objective_constant={program.objective_constant!r}"\n')
    out.write(f"{n}\n{len(sizes)}\n")
    out.write(" ".join(str(s) for s in sizes) + "\n")
    out.write(" ".join(repr(float(v)) for v in program.objective) + "\n")

    iu = np.triu_indices(8)
    for blkno, blk in enumerate(program.blocks, start=1):
        # F_0 = -M0 ; F_k = M_k
        m0 = np.tensordot(blk.coord_offset, basis, axes=1)
        for r, s in zip(*iu):
            if m0[r, s] != 0:
                out.write(f"0 {blkno} {r + 1} {s + 1} {-float(m0[r, s])!r}\n")
        cm = blk.coord_map.tocsc()
        for k in np.flatnonzero(np.diff(cm.indptr)):
            col = cm[:, k].toarray().ravel()
            mk = np.tensordot(col, basis, axes=1)
            for r, s in zip(*iu):
                if abs(mk[r, s]) > 0:
                    out.write(f"{k + 1} {blkno} {r + 1} {s + 1} {float(mk[r, s])!r}\n")

    lp = len(program.blocks) + 1
    for e, rhs in enumerate(program.eq_rhs):
        if rhs != 0:
            out.write(f"0 {lp} {2 * e + 1} {2 * e + 1} {float(rhs)!r}\n")
            out.write(f"0 {lp} {2 * e + 2} {2 * e + 2} {-float(rhs)!r}\n")
    coo = program.eq_matrix.tocoo()
    for e, k, v in zip(coo.row, coo.col, coo.data):
        if v != 0:
            out.write(f"{k + 1} {lp} {2 * e + 1} {2 * e + 1} {float(v)!r}\n")
            out.write(f"{k + 1} {lp} {2 * e + 2} {2 * e + 2} {-float(v)!r}\n")
