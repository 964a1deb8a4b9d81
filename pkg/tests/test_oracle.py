import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from piqp_approx.instance import PiqpInstance, complete_graph, generate, prune_infeasible_pairs, scale
from piqp_approx.oracle import OracleLimitError, brute_force, brute_force_mkp

from conftest import naive_optimum
from test_instance import instances


def test_triangle_with_budget_two():
    inst = PiqpInstance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], [0, 0, 0], [[1, 1, 1]], [2])
    res = brute_force(inst)
    assert res.optimum == 1
    assert res.argmax.x == (0, 1, 1)  # lexicographically smallest optimum
    assert res.count_explored == 8


def test_clique_k4(k4_clique):
    assert brute_force(k4_clique).optimum == 3


def test_empty_benefits():
    inst = PiqpInstance(np.zeros((4, 4), int), [0] * 4, [[1] * 4], [2])
    res = brute_force(inst)
    assert res.optimum == 0 and res.argmax.x == (0, 0, 0, 0)


def test_limit_guard():
    inst = generate("qkp", seed=0, n=9, density=0.3)
    with pytest.raises(OracleLimitError):
        brute_force(inst, limit_n=8)
    assert brute_force(inst, limit_n=9).optimum >= 0


def test_fixed_variables_not_enumerated():
    s = prune_infeasible_pairs(scale(PiqpInstance([[0, 3], [3, 0]], [0, 0], [[1, 9]], [5])))
    res = brute_force(s)
    assert res.count_explored == 2


def test_mkp_examples():
    assert brute_force_mkp([10, 6], [[5, 4]], [8]).optimum == 10
    assert brute_force_mkp([7], [[3]], [3]).argmax.x == (1,)
    assert brute_force_mkp([1, 2, 3], [[1, 1, 1]], [3]).optimum == 6


def test_crosses_table_boundary():
    # 17 variables exercises the Gray-code walk over the high bits
    inst = generate("qkp", seed=21, n=17, p=2, density=0.4)
    rng = np.random.default_rng(0)
    res = brute_force(inst)
    assert res.argmax.feasible and res.argmax.objective == res.optimum
    for _ in range(2000):
        x = rng.integers(0, 2, inst.n)
        if np.all(inst.A @ x <= inst.budgets):
            assert int(x @ inst.B @ x) // 2 <= res.optimum


@given(instances(max_n=7))
def test_matches_naive_enumeration(inst):
    res = brute_force(inst)
    best, arg = naive_optimum(inst.B, inst.c, inst.A, inst.budgets)
    assert res.optimum == best
    assert res.argmax.x == tuple(int(v) for v in arg)


@given(instances(max_n=6))
def test_quadratic_only(inst):
    res = brute_force(inst, quadratic_only=True)
    assert res.optimum == naive_optimum(inst.B, inst.c, inst.A, inst.budgets, quadratic_only=True)[0]


@given(instances(max_n=6), st.data())
def test_monotone_in_benefit(inst, data):
    i = data.draw(st.integers(0, inst.n - 1))
    j = data.draw(st.integers(0, inst.n - 1))
    if i == j:
        return
    B = inst.B.copy()
    B[i, j] += 3
    B[j, i] += 3
    more = PiqpInstance(B, inst.c, inst.A, inst.budgets)
    assert brute_force(more).optimum >= brute_force(inst).optimum
