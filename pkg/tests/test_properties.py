import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from sketchipm.ipm import approx_newton_step
from sketchipm.lewis import reference_lewis_weights, weighted_leverage
from sketchipm.matvec import perturbation_bound_check
from sketchipm.oracle import CostKind, CostLedger, HalvingChain, LpInstance, RowOracle, gen_random_tall_lp, modeled_quantum_cost
from sketchipm.sketch import direct_build, leverage_scores_exact, weighted_subsample

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def matrices(min_n=2, max_n=40, max_d=5):
    @st.composite
    def build(draw):
        d = draw(st.integers(1, max_d))
        n = draw(st.integers(max(min_n, d), max_n))
        seed = draw(st.integers(0, 2**32 - 1))
        return np.random.default_rng(seed).standard_normal((n, d))

    return build()


@FAST
@given(matrices())
def test_leverage_sum_is_rank(A):
    sig = leverage_scores_exact(A)
    assert np.all(sig >= -1e-12) and np.all(sig <= 1 + 1e-10)
    assert abs(sig.sum() - np.linalg.matrix_rank(A)) <= 1e-8


@FAST
@given(matrices(), st.integers(0, 1000))
def test_direct_estimator_matches_exact(A, seed):
    est = direct_build(A)
    assert np.allclose(est.query(A), leverage_scores_exact(A), atol=1e-8)


@FAST
@given(matrices(), st.floats(0.1, 1.0), st.integers(0, 1000))
def test_subsample_infinite_weight_rows_always_kept(A, eps, seed):
    w = np.zeros(len(A))
    w[::2] = np.inf
    sk = weighted_subsample(A, w, eps, rng=seed)
    assert np.array_equal(sk.source_indices, np.arange(0, len(A), 2))


@FAST
@given(st.integers(0, 2**63), st.integers(8, 3000), st.integers(1, 4))
def test_chain_nested(seed, n, d):
    ch = HalvingChain(seed, n, d)
    depth = ch.depths()
    for lv in range(ch.L):
        assert set(np.flatnonzero(depth >= lv + 1)) <= set(np.flatnonzero(depth >= lv))


@FAST
@given(st.lists(st.integers(0, 19), max_size=50))
def test_ledger_counts_reads(idx):
    led = CostLedger()
    RowOracle(np.ones((20, 2)), led, "x").rows(np.array(idx, dtype=int))
    assert led.classical("x") == len(idx)


@FAST
@given(st.sampled_from(list(CostKind)), st.integers(1, 10**6), st.integers(1, 100), st.floats(0.01, 1.0))
def test_modeled_cost_monotone(kind, n, d, eps):
    n = max(n, d)
    a = modeled_quantum_cost(kind, n, d, eps)
    assert a > 0
    assert modeled_quantum_cost(kind, 4 * n, d, eps) >= a
    assert modeled_quantum_cost(kind, n, d, eps / 2) > a


@FAST
@given(matrices(min_n=3, max_n=30, max_d=3), st.floats(0.0, 0.5), st.integers(0, 1000))
def test_perturbation_bound_holds(B, eps, seed):
    if np.linalg.matrix_rank(B) < B.shape[1]:
        return
    g = np.random.default_rng(seed)
    v = g.standard_normal(len(B))
    D = 1 + g.uniform(-eps, eps, size=len(B))
    lhs, rhs = perturbation_bound_check(B, v, D)
    assert lhs <= rhs * (1 + 1e-9) + 1e-12


@FAST
@given(st.integers(1, 6), st.integers(0, 1000))
def test_newton_step_solves_system(d, seed):
    g = np.random.default_rng(seed)
    M = g.standard_normal((d, d))
    Q = M @ M.T + 0.1 * np.eye(d)
    grad = g.standard_normal(d)
    dv, nq = approx_newton_step(Q, grad)
    assert np.linalg.norm(Q @ dv + grad) <= 1e-8 * (1 + np.linalg.norm(grad))
    assert nq >= 0


@FAST
@given(matrices(min_n=4, max_n=30, max_d=3), st.sampled_from([3.0, 4.0, 6.0]))
def test_lewis_weights_sum_to_d(A, p):
    if np.linalg.matrix_rank(A) < A.shape[1] or np.linalg.cond(A) > 1e6:
        return
    res = reference_lewis_weights(A, p, tol=1e-10)
    assert abs(res.weights.sum() - A.shape[1]) <= 1e-6
    assert np.all(res.weights <= 1 + 1e-9)


@FAST
@given(matrices(min_n=2, max_n=30, max_d=3), st.integers(0, 1000))
def test_weighted_leverage_scale_invariance(A, seed):
    if np.linalg.matrix_rank(A) < A.shape[1] or np.linalg.cond(A) > 1e6:
        return
    s = np.random.default_rng(seed).uniform(0.5, 2.0, size=len(A))
    assert np.allclose(weighted_leverage(A, s), leverage_scores_exact(A * s[:, None]), atol=1e-9)


@FAST
@given(st.integers(2, 40), st.integers(1, 4), st.integers(0, 10**6))
def test_generated_lps_roundtrip(n, d, seed):
    n = max(n, 2 * d)
    inst = gen_random_tall_lp(n, d, seed)
    back = LpInstance.from_json(inst.to_json())
    assert np.array_equal(back.A, inst.A) and np.array_equal(back.x0, inst.x0)
    assert (inst.A @ inst.x0 - inst.b).min() >= 0.05 - 1e-12
