import numpy as np
import pytest
from dataclasses import replace

from untrusted_witness.lattice import lambda_sets
from untrusted_witness.linalg import PAULI_PRODUCTS, min_eigenvalue, partial_transpose
from untrusted_witness.model import (
    ASSIGNMENT,
    DISCARD,
    build_discard_program,
    build_program,
    witness_value,
)
from untrusted_witness.oracle import build_appendix_ensemble, verify_feasibility
from untrusted_witness.solver import (
    INFEASIBLE,
    OPTIMAL,
    _pauli_svec,
    _svec,
    certify,
    solve,
)
from untrusted_witness.witness import bell_witness, build_theta_witness

from local_search import search_upper_bound

W = bell_witness()


def test_svec_matches_inner_product(rng):
    for _ in range(10):
        a, b = rng.normal(size=(2, 8, 8))
        a, b = a + a.T, b + b.T
        assert _svec(a) @ _svec(b) == pytest.approx(np.trace(a @ b))
    assert _pauli_svec().shape == (36, 16)


@pytest.mark.parametrize(
    "eta, expected",
    [(0.9, 0.25 - 1 / (4 * 0.81)), (0.5, -0.5), (1.0, 0.0)],
)
def test_discard_bell_values(eta, expected):
    report = solve(build_discard_program(W, eta))
    assert report.status == OPTIMAL
    assert report.optimum == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("eta, expected", [(0.8, 0.0), (0.5, 0.0625), (0.0, 0.25)])
def test_assignment_bell_values(eta, expected):
    report = solve(build_program(W, eta, ASSIGNMENT))
    assert report.ok
    assert report.optimum == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("strategy", [DISCARD, ASSIGNMENT])
def test_report_is_certified(strategy):
    prog = build_program(build_theta_witness(np.pi / 5), 0.7, strategy)
    report = solve(prog)
    assert report.ok
    res = certify(prog, report.x)
    assert res.max_equality_violation <= 1e-6
    assert res.min_block_eigenvalue >= -1e-7
    assert report.residuals.worst <= 1e-6
    # operators checked directly, not through the block maps
    for rho in report.ensemble:
        assert min_eigenvalue(rho) >= -1e-7
        assert min_eigenvalue(partial_transpose(rho)) >= -1e-7
    recomputed = witness_value(report.ensemble, prog.witness, prog.eta, strategy)
    assert recomputed == pytest.approx(report.optimum, abs=1e-8)


@pytest.mark.parametrize("eta", np.linspace(0.4, 1.0, 13))
def test_optimum_below_explicit_attack(eta):
    for strategy in (DISCARD, ASSIGNMENT):
        prog = build_program(W, eta, strategy)
        attack = verify_feasibility(build_appendix_ensemble(eta), prog)
        assert attack.is_feasible(eq_tol=1e-12, psd_tol=1e-12)
        assert solve(prog).optimum <= attack.objective + 1e-6


def test_objective_scaling():
    prog = build_discard_program(build_theta_witness(np.pi / 6), 0.8)
    base = solve(prog).optimum
    for c in (0.5, 3.0):
        assert solve(prog.scaled(c)).optimum == pytest.approx(c * base, abs=1e-9 + 1e-9 * abs(c * base))


def test_inconsistent_click_rates_are_infeasible():
    prog = build_discard_program(W, 0.6)
    rhs = prog.eq_rhs.copy()
    rhs[prog.eq_labels.index("click:A1B1")] = 0.9  # joint rate above the single rate
    report = solve(replace(prog, eq_rhs=rhs))
    assert report.status == INFEASIBLE
    assert not report.ok
    assert np.isnan(report.optimum)


def test_iteration_limit_is_not_reported_optimal():
    report = solve(build_discard_program(W, 0.7), max_iter=3)
    assert report.status != OPTIMAL


def test_local_search_upper_bound_theta_pi6():
    prog = build_discard_program(build_theta_witness(np.pi / 6), 0.75)
    bound, ens = search_upper_bound(prog, starts=2, seed=1)
    assert verify_feasibility(ens, prog).is_feasible(eq_tol=1e-12, psd_tol=1e-12)
    # explicit attacks already beat every honest separable source (value >= 0)
    assert bound < 0
    assert solve(prog).optimum <= bound + 1e-6


def _cvxpy_discard_min(theta, eta):
    cp = pytest.importorskip("cvxpy")
    if "CVXOPT" not in cp.installed_solvers():
        pytest.skip("CVXOPT backend not installed")
    w = build_theta_witness(theta).coeffs
    sets = lambda_sets()
    rho = [cp.Variable((4, 4), hermitian=True) for _ in range(64)]
    cons = []
    for r in rho:
        cons += [r >> 0, cp.partial_transpose(r, (2, 2), 0) >> 0]
    tr = [cp.real(cp.trace(r)) for r in rho]
    for i in (1, 2, 3):
        cons.append(sum(tr[lam] for lam in np.flatnonzero(sets.alice[i])) == eta)
        cons.append(sum(tr[lam] for lam in np.flatnonzero(sets.bob[i])) == eta)
        for j in (1, 2, 3):
            cons.append(sum(tr[lam] for lam in np.flatnonzero(sets.cell(i, j))) == eta**2)
    cons.append(sum(tr) == 1)
    observed = np.eye(4) / 4
    value = w[0, 0]
    for i in range(4):
        for j in range(4):
            if (i, j) == (0, 0):
                continue
            n = (i > 0) + (j > 0)
            s = sum(
                cp.real(cp.trace(PAULI_PRODUCTS[i, j] @ rho[lam])) for lam in np.flatnonzero(sets.cell(i, j))
            ) / eta**n
            observed = observed + s * PAULI_PRODUCTS[i, j] / 4
            value = value + w[i, j] * s
    cons.append(observed >> 0)
    prob = cp.Problem(cp.Minimize(value), cons)
    prob.solve(solver="CVXOPT")
    assert prob.status == "optimal"
    return prob.value


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_agrees_with_independent_modeling_layer():
    theta, eta = np.pi / 6, 0.75
    expected = _cvxpy_discard_min(theta, eta)
    assert solve(build_discard_program(build_theta_witness(theta), eta)).optimum == pytest.approx(expected, abs=1e-6)
