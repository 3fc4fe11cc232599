import math

import numpy as np
import pytest
from scipy.optimize import linprog

from sketchipm.errors import DomainError, InfeasibleInterior
from sketchipm.ipm import (
    ALPHA,
    NewtonParams,
    approx_newton_step,
    initial_centering,
    make_oracles,
    path_follow,
    predicted_outer,
)
from sketchipm.oracle import LpInstance, gen_random_tall_lp, one_d_box


def highs_value(inst):
    res = linprog(inst.c, A_ub=-inst.A, b_ub=-inst.b, bounds=[(None, None)] * inst.d, method="highs")
    assert res.status == 0
    return res.fun


def test_newton_step_examples(rng):
    Q = np.eye(3)
    d0, n0 = approx_newton_step(Q, np.zeros(3))
    assert not d0.any() and n0 == 0
    g = rng.standard_normal(3)
    assert np.allclose(approx_newton_step(Q, g)[0], -g)
    M = rng.standard_normal((3, 3))
    Q = M @ M.T + np.eye(3)
    dv, nq = approx_newton_step(Q, g)
    assert np.linalg.norm(Q @ dv + g) <= 1e-10
    assert nq == pytest.approx(math.sqrt(dv @ Q @ dv))


def test_newton_step_needs_pd():
    with pytest.raises(np.linalg.LinAlgError):
        approx_newton_step(-np.eye(2), np.ones(2))


def test_params_constraint():
    prm = NewtonParams(100.0)
    assert prm.beta == pytest.approx(1 + 1 / 80)
    assert prm.max_inner == 64
    with pytest.raises(DomainError):
        NewtonParams(100.0, alpha=0.2, zeta=0.1)
    with pytest.raises(DomainError):
        NewtonParams(100.0, C=0.5)


def test_centering_box():
    box = one_d_box()
    prm = NewtonParams.for_barrier("log", 2, 1, "exact")
    state, _ = initial_centering(box, "log", prm, make_oracles("log", box, "exact"), x0=[0.2])
    # ||d||_Q <= α/2 puts x within about α/(2√8) of the centre
    assert abs(state.x[0] - 0.5) <= ALPHA / (2 * math.sqrt(8)) * 1.1


def test_centering_boundary_start():
    box = one_d_box()
    prm = NewtonParams.for_barrier("log", 2, 1, "exact")
    with pytest.raises(InfeasibleInterior):
        initial_centering(box, "log", prm, make_oracles("log", box, "exact"), x0=[1.0])


def test_box_exact_log():
    res = path_follow(one_d_box(), "log", 1e-3, mode="exact")
    assert 0 < res.x[0] <= 1e-3
    assert res.trace.max_inner() <= 16


@pytest.mark.parametrize("kind", ["log", "volumetric", "hybrid", "lewis"])
def test_exact_modes_reach_gap(kind):
    inst = gen_random_tall_lp(40, 2, 21)
    val = highs_value(inst)
    res = path_follow(inst, kind, 1e-2, mode="exact")
    assert res.min_slack > 0
    assert res.objective - val <= 1e-2
    assert res.trace.outer_iterations == predicted_outer(res.trace.theta, 1e-2, res.trace.eta0, res.trace.beta)


def test_sketched_hybrid_against_reference():
    inst = gen_random_tall_lp(200, 3, 5)
    ref = path_follow(inst, "log", 1e-8, mode="exact")
    assert abs(ref.objective - highs_value(inst)) <= 1e-7
    res = path_follow(inst, "hybrid", 1e-2, mode="sketched", seed=1)
    assert res.min_slack > 0
    assert res.objective - ref.objective <= 1e-2


def test_trace_records_and_ledger():
    inst = gen_random_tall_lp(30, 2, 4)
    seen = []
    res = path_follow(inst, "log", 1e-1, mode="sketched", seed=2, record=True, on_record=seen.append)
    assert len(seen) == len(res.trace.records) > 0
    assert all("ledger" in r for r in seen)
    assert res.ledger.total_classical() > 0


def test_sketched_is_seed_deterministic():
    inst = gen_random_tall_lp(30, 2, 4)
    a = path_follow(inst, "log", 1e-1, seed=3)
    b = path_follow(inst, "log", 1e-1, seed=3)
    assert np.array_equal(a.x, b.x)
    assert a.ledger.snapshot() == b.ledger.snapshot()


def test_path_follow_rejects_eps():
    with pytest.raises(DomainError):
        path_follow(one_d_box(), "log", 0.0)


def test_instance_without_interior():
    inst = LpInstance(np.array([[1.0], [-1.0]]), [0.0, -1.0], [1.0])
    with pytest.raises(DomainError):
        path_follow(inst, "log", 1e-2, mode="exact")
