import numpy as np
import pytest

from sketchipm.errors import BoundViolation, DomainError, RankDeficientError
from sketchipm.linalg import psd_sqrt_pair
from sketchipm.matvec import (
    MatVecRequest,
    estimate_matvec,
    exact_matvec,
    local_error,
    matvec_samples,
    mom_schedule,
    perturbation_bound_check,
    preconditioner,
)
from sketchipm.oracle import CostLedger, RowOracle


def test_zero_vector_gives_zero(rng):
    B = rng.standard_normal((200, 3))
    y = estimate_matvec(MatVecRequest(B, np.zeros(200), 1.0, 0.1), rng=1)
    assert np.array_equal(y, np.zeros(3))


def test_identity_square(rng):
    for t in range(10):
        v = rng.uniform(-1, 1, size=4)
        y = estimate_matvec(MatVecRequest(np.eye(4), v, 1.0, 0.1), rng=t)
        assert np.linalg.norm(y - v) <= 0.1


def test_random_tall_error(rng):
    B = rng.standard_normal((2048, 4))
    v = np.ones(2048)
    BtB = B.T @ B
    ok = sum(local_error(estimate_matvec(MatVecRequest(B, v, 1.0, 0.2), rng=t), B.T @ v, BtB) <= 0.2 for t in range(30))
    assert ok >= 27


def test_ledger_charges_all_draws(rng):
    B = rng.standard_normal((300, 2))
    led = CostLedger()
    req = MatVecRequest(RowOracle(B, led, "mv"), np.ones(300), 1.0, 0.5, 0.05)
    _, info = estimate_matvec(req, rng=0, return_info=True)
    G, m = mom_schedule(300, 2, 1.0, 0.5, 0.05)
    assert info["samples"] == G * m
    assert led.classical("mv") == G * m
    assert led.classical("mv:precond") >= 1
    assert led.modeled("mv") > 0


def test_bound_violation_names_index(rng):
    B = rng.standard_normal((50, 2))
    v = np.ones(50)
    v[17] = 5.0
    with pytest.raises(BoundViolation) as exc:
        estimate_matvec(MatVecRequest(B, v, 1.0, 0.5), rng=0)
    assert exc.value.index == 17


def test_rank_deficient(rng):
    B = np.zeros((40, 2))
    B[:, 0] = rng.standard_normal(40)
    with pytest.raises(RankDeficientError):
        estimate_matvec(MatVecRequest(B, np.ones(40), 1.0, 0.5), rng=0)


def test_request_validation():
    with pytest.raises(DomainError):
        MatVecRequest(np.eye(2), np.ones(2), 1.0, 0.0)
    with pytest.raises(DomainError):
        MatVecRequest(np.eye(2), np.ones(2), 1.0, 0.1, 1.0)


def test_exact_matvec_examples(rng):
    B = rng.standard_normal((20, 3))
    e = np.zeros(20)
    e[0] = 1
    assert np.array_equal(exact_matvec(B, e), B[0])
    assert not exact_matvec(np.zeros((5, 2)), np.ones(5)).any()
    v = rng.standard_normal(20)
    assert np.allclose(exact_matvec(B, v), [sum(B[i, j] * v[i] for i in range(20)) for j in range(3)], atol=1e-12)


def test_perturbation_bound(rng):
    B = rng.standard_normal((100, 3))
    v = rng.standard_normal(100)
    assert perturbation_bound_check(B, v, np.ones(100))[0] == 0.0
    for t in range(10):
        D = 1 + np.random.default_rng(t).uniform(-0.1, 0.1, size=100)
        lhs, rhs = perturbation_bound_check(B, v, D)
        assert lhs <= rhs + 1e-12


def test_second_moment_bound(rng):
    n = 500
    B = rng.standard_normal((n, 3))
    v = rng.uniform(-1, 1, size=n)
    Wh, Wmh = preconditioner(B, 0)
    # exact second moment of X = n v_l W^{-1/2} b_l under uniform l
    Z = B @ Wmh
    second = n * np.sum((v[:, None] * Z) ** 2, axis=0)
    assert np.all(second <= 1.5 * n * np.max(np.abs(v)) ** 2)
    X = matvec_samples(B, v, Wmh, 20000, np.random.default_rng(1))
    assert np.allclose(X.mean(axis=0), Wmh @ B.T @ v, atol=5 * np.sqrt(second.max() / 20000))
