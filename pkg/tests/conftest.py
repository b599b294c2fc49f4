import numpy as np
import pytest

from edr_pav.datagen import RegressionProblem, Truth
from edr_pav.linalg import DesignMatrix, normalize_columns


def random_problem(rng, n, p):
    X = normalize_columns(rng.normal(size=(n, p)))
    y = rng.normal(size=n)
    return RegressionProblem(X, y)


def orthonormal_problem(rng, n, sigma=1.0):
    """Orthonormal design via QR, beta* ~ N(0, I), u ~ N(0, sigma^2 I / n)."""
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    beta = rng.normal(size=n)
    u = rng.normal(0.0, sigma / np.sqrt(n), size=n)
    X = DesignMatrix(Q, np.ones(n))
    return RegressionProblem(X, Q @ beta + u, Truth(beta, u, sigma))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
