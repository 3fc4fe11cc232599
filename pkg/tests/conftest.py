import numpy as np
import pytest

from sketchipm.oracle import gen_random_tall_lp

ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"acceptance {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_full_rank(rng, n, d):
    return rng.standard_normal((n, d))


def brute_leverage(A):
    """``a_i^T (A^T A)^+ a_i`` by an explicit pseudoinverse."""
    return np.einsum("ij,jk,ik->i", A, np.linalg.pinv(A.T @ A), A)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_lp():
    return gen_random_tall_lp(40, 3, 11)


@pytest.fixture(scope="session")
def report_line():
    return report
