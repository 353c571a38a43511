"""Interior-point solution of :class:`~untrusted_witness.model.ConicProgram`.

Hermitian blocks are mapped to real symmetric ones through the embedding
``[[Re, -Im], [Im, Re]]`` and handed to Clarabel's PSD triangle cone. The
primal point is then certified independently: equality residuals and block
eigenvalues are recomputed from the program before a report is marked optimal.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from functools import lru_cache

import clarabel
import numpy as np
import scipy.sparse as sp

from .linalg import PAULI_PRODUCTS, min_eigenvalue, real_embedding
from .model import DISCARD, EQUALITY_TOL, ConicProgram, PsdBlock, vector_to_ensemble

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical_failure"

PSD_GATE = -1e-7
TARGET_TOL = 1e-9
PHASE1_GATE = 1e-6
MAX_ITER = 300

_SOLVED = {"Solved", "AlmostSolved"}
_INFEASIBLE = {"PrimalInfeasible", "AlmostPrimalInfeasible"}


@dataclass(frozen=True)
class Residuals:
    max_equality_violation: float
    min_block_eigenvalue: float
    duality_gap: float | None = None

    @property
    def worst(self) -> float:
        """Single residual figure: equality violation or PSD violation, whichever is larger."""
        return max(self.max_equality_violation, max(0.0, -self.min_block_eigenvalue))


@dataclass(frozen=True)
class SolveReport:
    status: str
    optimum: float
    ensemble: np.ndarray | None
    x: np.ndarray | None
    residuals: Residuals
    iterations: int
    solve_time: float
    engine_status: str

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _svec(m: np.ndarray) -> np.ndarray:
    """Upper triangle, column-major, off-diagonals scaled by sqrt(2)."""
    n = m.shape[0]
    out = []
    for col in range(n):
        for row in range(col + 1):
            out.append(m[row, col] if row == col else np.sqrt(2) * m[row, col])
    return np.array(out)


@lru_cache(maxsize=1)
def _pauli_svec() -> np.ndarray:
    """(36, 16): svec of the real embedding of each ``sigma_i (x) sigma_j / 4``."""
    cols = [_svec(real_embedding(PAULI_PRODUCTS[i, j] / 4)) for i in range(4) for j in range(4)]
    return np.stack(cols, axis=1)


def _block_scale(program: ConicProgram, blk: PsdBlock) -> float:
    # The observed block carries eta^-2 entries; a positive multiple of a PSD
    # constraint is the same constraint and conditions far better.
    return program.eta**2 if blk.kind == "observed" else 1.0


def _cost_scale(program: ConicProgram) -> float:
    return program.eta**2 if program.strategy == DISCARD else 1.0


def _block_rows(blk: PsdBlock, scale: float = 1.0) -> tuple[sp.csr_matrix, np.ndarray]:
    s = scale * _pauli_svec()
    a = -sp.csr_matrix(s) @ blk.coord_map
    b = s @ blk.coord_offset
    return sp.csr_matrix(a), b


def _cone_rows(program: ConicProgram):
    rows, rhs, cones = [], [], []
    for blk in program.blocks:
        a, b = _block_rows(blk, _block_scale(program, blk))
        rows.append(a)
        rhs.append(b)
        cones.append(clarabel.PSDTriangleConeT(2 * blk.size))
    return rows, rhs, cones


def _settings(max_iter: int) -> clarabel.DefaultSettings:
    st = clarabel.DefaultSettings()
    st.verbose = False
    st.tol_gap_abs = TARGET_TOL
    st.tol_gap_rel = TARGET_TOL
    st.tol_feas = TARGET_TOL
    st.max_iter = max_iter
    # Ruiz equilibration stalls on these programs at low efficiency and near
    # 1/sqrt(3); the explicit rescaling above is enough on its own.
    st.equilibrate_enable = False
    return st


def block_min_eigenvalue(program: ConicProgram, x) -> float:
    return min(min_eigenvalue(blk.matrix(x)) for blk in program.blocks)


def certify(program: ConicProgram, x) -> Residuals:
    """Residuals of a primal point, scaled by each equality's right-hand side."""
    res = np.abs(program.equality_residuals(x)) / np.maximum(1.0, np.abs(program.eq_rhs))
    return Residuals(float(res.max()), block_min_eigenvalue(program, x))


def _phase1(program: ConicProgram, max_iter: int) -> float:
    """Smallest achievable max-equality violation over the PSD blocks."""
    n = program.n_vars
    eq = program.eq_matrix
    m = eq.shape[0]
    ones = sp.csr_matrix(np.ones((m, 1)))
    a_up = sp.hstack([eq, -ones])
    a_dn = sp.hstack([-eq, -ones])
    rows, rhs, cones = _cone_rows(program)
    rows = [sp.hstack([r, sp.csr_matrix((r.shape[0], 1))]) for r in rows]
    a = sp.vstack([a_up, a_dn, *rows]).tocsc()
    b = np.concatenate([program.eq_rhs, -program.eq_rhs, *rhs])
    q = np.zeros(n + 1)
    q[-1] = 1.0
    p = sp.csc_matrix((n + 1, n + 1))
    cones = [clarabel.NonnegativeConeT(2 * m), *cones]
    sol = clarabel.DefaultSolver(p, q, a, b, cones, _settings(max_iter)).solve()
    if str(sol.status) in _SOLVED:
        return float(sol.x[-1])
    return float("inf")


def solve(program: ConicProgram, max_iter: int = MAX_ITER) -> SolveReport:
    """Minimize ``program``; the returned optimum is re-evaluated from the primal point."""
    t0 = time.perf_counter()
    n = program.n_vars
    rows, rhs, cones = _cone_rows(program)
    a = sp.vstack([program.eq_matrix, *rows]).tocsc()
    b = np.concatenate([program.eq_rhs, *rhs])
    cones = [clarabel.ZeroConeT(len(program.eq_rhs)), *cones]
    p = sp.csc_matrix((n, n))
    q = _cost_scale(program) * program.objective
    sol = clarabel.DefaultSolver(p, q, a, b, cones, _settings(max_iter)).solve()
    engine_status = str(sol.status)
    x = np.array(sol.x)

    if engine_status in _SOLVED:
        residuals = certify(program, x)
        gap = abs(sol.obj_val - sol.obj_val_dual) / _cost_scale(program)
        residuals = Residuals(residuals.max_equality_violation, residuals.min_block_eigenvalue, gap)
        ok = residuals.max_equality_violation <= EQUALITY_TOL and residuals.min_block_eigenvalue >= PSD_GATE
        status = OPTIMAL if ok else NUMERICAL_FAILURE
    elif engine_status in _INFEASIBLE:
        status = INFEASIBLE
        residuals = Residuals(float("inf"), float("nan"))
    else:
        violation = _phase1(program, max_iter)
        status = INFEASIBLE if violation > PHASE1_GATE else NUMERICAL_FAILURE
        residuals = certify(program, x) if np.all(np.isfinite(x)) else Residuals(float("nan"), float("nan"))

    elapsed = time.perf_counter() - t0
    optimum = program.objective_value(x) if status == OPTIMAL else float("nan")
    log.info(
        "solve %s eta=%.6g: %s (engine %s, %d iterations, %.2fs) optimum=%.12g residual=%.2e",
        program.strategy, program.eta, status, engine_status, sol.iterations, elapsed,
        optimum, residuals.worst,
    )
    return SolveReport(
        status=status,
        optimum=optimum,
        ensemble=vector_to_ensemble(x) if status == OPTIMAL else None,
        x=x if status == OPTIMAL else None,
        residuals=residuals,
        iterations=int(sol.iterations),
        solve_time=elapsed,
        engine_status=engine_status,
    )
