import sys

import numpy as np
import pytest

from untrusted_witness.linalg import bloch_operator


def random_state(rng, rank=None):
    rank = rng.integers(1, 5) if rank is None else rank
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_bloch(rng, max_norm=1.0, exact=False):
    """Uniform in the ball of radius ``max_norm``, or on its surface if ``exact``."""
    v = rng.normal(size=3)
    radius = max_norm if exact else max_norm * rng.uniform() ** (1 / 3)
    return v / np.linalg.norm(v) * radius


def random_product_mixture(rng, terms=3):
    weights = rng.dirichlet(np.ones(terms))
    return sum(
        w * np.kron(bloch_operator(random_bloch(rng)), bloch_operator(random_bloch(rng)))
        for w in weights
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
