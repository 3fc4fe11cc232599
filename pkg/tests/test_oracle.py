import numpy as np
import pytest
from scipy.optimize import linprog

from sketchipm.errors import BoundsError, DomainError, InfeasibleInterior, ShapeError
from sketchipm.oracle import (
    CostKind,
    CostLedger,
    HalvingChain,
    LpInstance,
    RowOracle,
    chain_depth,
    chain_member,
    gen_random_tall_lp,
    gen_search_hard_matrix,
    load_lp,
    modeled_quantum_cost,
    one_d_box,
    parse_lp_text,
    format_lp_text,
    row_query,
    save_lp,
)


def identity_lp():
    return LpInstance(np.eye(2), [-1.0, -2.0], [1.0, 1.0])


def test_row_query_identity_readback():
    led = CostLedger()
    a, b = row_query(identity_lp(), 1, led)
    assert np.array_equal(a, [0.0, 1.0])
    assert b == -2.0


def test_row_query_counts_each_read():
    led = CostLedger()
    inst = identity_lp()
    row_query(inst, 0, led, "q")
    row_query(inst, 0, led, "q")
    assert led.classical("q") == 2


def test_row_query_out_of_range():
    inst = identity_lp()
    with pytest.raises(BoundsError):
        row_query(inst, inst.n, CostLedger())
    with pytest.raises(BoundsError):
        row_query(inst, -1, CostLedger())


def test_row_oracle_charges_block_and_scale():
    led = CostLedger()
    A = np.arange(12.0).reshape(6, 2)
    orc = RowOracle(A, led, "blk", scale=np.full(6, 2.0))
    out = orc.rows([1, 3, 3])
    assert np.array_equal(out, 2 * A[[1, 3, 3]])
    assert led.classical("blk") == 3
    with pytest.raises(BoundsError):
        orc.rows([6])


def test_ledger_snapshot_is_deterministic():
    led = CostLedger()
    led.charge("b", 3)
    led.charge("a", 1)
    led.add_modeled("a", 2.5)
    snap = led.snapshot()
    assert list(snap) == sorted(snap)
    assert snap["a"]["classical_row_queries"] == 1 and snap["a"]["modeled_quantum_row_queries"] == 2.5
    assert led.total_classical() == 4


def test_chain_level_zero_contains_everything():
    ch = HalvingChain(99, 1000, 4)
    assert all(chain_member(ch, i, 0) for i in range(0, 1000, 37))


def test_chain_member_is_deterministic():
    a = HalvingChain(7, 512, 2)
    b = HalvingChain(7, 512, 2)
    assert [chain_member(a, i, 3) for i in range(100)] == [chain_member(b, i, 3) for i in range(100)]


def test_chain_levels_nest_and_halve():
    ch = HalvingChain(3, 8192, 2)
    assert ch.L == chain_depth(8192, 2) == 12
    prev = set(range(8192))
    for lv in range(1, 5):
        cur = set(ch.level_indices(lv).tolist())
        assert cur <= prev
        assert abs(len(cur) - len(prev) / 2) < 4 * np.sqrt(len(prev))
        prev = cur
    depth = ch.depths()
    assert np.array_equal(np.flatnonzero(depth >= 3), ch.level_indices(3))


def test_chain_member_rejects_bad_level():
    ch = HalvingChain(1, 64, 2)
    with pytest.raises(DomainError):
        chain_member(ch, 0, ch.L + 1)


def test_modeled_cost_examples():
    assert modeled_quantum_cost(CostKind.SpectralApprox, 10**6, 100, 1.0) == pytest.approx(1e4)
    assert modeled_quantum_cost(CostKind.GradLog, 10**4, 10, 1.0) == pytest.approx(1e3)
    assert modeled_quantum_cost("SpectralApprox", 7, 7, 1.0) == pytest.approx(7)
    assert modeled_quantum_cost(CostKind.LewisWeights, 100, 4, 0.5) == pytest.approx(10 * 8 / 0.25)
    assert modeled_quantum_cost(CostKind.GradLewis, 100, 4, 0.5) == pytest.approx(10 * 32 / 0.25)


@pytest.mark.parametrize("eps", [0.0, -1.0, 1.5, float("nan")])
def test_modeled_cost_rejects_eps(eps):
    with pytest.raises(DomainError):
        modeled_quantum_cost(CostKind.MatVec, 10, 2, eps)


def test_generator_interior_and_deterministic():
    a = gen_random_tall_lp(100, 3, 7)
    b = gen_random_tall_lp(100, 3, 7)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b) and np.array_equal(a.c, b.c)
    assert (a.A @ a.x0 - a.b).min() > 0


def test_generator_region_is_bounded():
    inst = gen_random_tall_lp(100, 3, 7)
    for j in range(3):
        for sgn in (1.0, -1.0):
            c = np.zeros(3)
            c[j] = sgn
            res = linprog(c, A_ub=-inst.A, b_ub=-inst.b, bounds=[(None, None)] * 3, method="highs")
            assert res.status == 0 and abs(res.fun) <= 1.0 + 1e-9


def test_search_hard_matrix():
    assert not gen_search_hard_matrix(6, 2, np.zeros((2, 3))).any()
    A = gen_search_hard_matrix(6, 2, np.ones((2, 3)))
    assert np.array_equal(A.T @ A, 3 * np.eye(2))
    z = np.random.default_rng(0).integers(0, 2, size=(3, 8))
    A = gen_search_hard_matrix(24, 3, z)
    assert np.array_equal(A.T @ A, np.diag(z.sum(axis=1)))
    with pytest.raises(ShapeError):
        gen_search_hard_matrix(7, 2, np.zeros((2, 3)))


def test_lp_roundtrip_json_and_text(tmp_path):
    inst = gen_random_tall_lp(12, 2, 1)
    save_lp(inst, tmp_path / "a.json")
    back = load_lp(tmp_path / "a.json")
    assert np.array_equal(back.A, inst.A) and np.array_equal(back.x0, inst.x0)
    txt = parse_lp_text(format_lp_text(inst))
    assert np.array_equal(txt.A, inst.A) and np.array_equal(txt.b, inst.b) and np.array_equal(txt.c, inst.c)


def test_lp_validation():
    with pytest.raises(ShapeError):
        LpInstance(np.ones((2, 3)), [0, 0], [1, 1, 1])
    with pytest.raises(InfeasibleInterior) as exc:
        LpInstance(np.array([[1.0], [-1.0]]), [0.0, -1.0], [1.0], [0.0])
    assert exc.value.index == 0
    with pytest.raises(ShapeError):
        parse_lp_text("garbage\n")


def test_one_d_box():
    box = one_d_box()
    assert box.n == 2 and box.d == 1
    assert np.allclose(box.A @ box.x0 - box.b, [0.5, 0.5])
