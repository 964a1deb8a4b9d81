import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from piqp_approx.instance import (
    GraphView, InstanceError, PiqpInstance, complete_graph, dumps_instance, evaluate, generate,
    heavy_set, instance_from_dict, prune_infeasible_pairs, read_instance, scale, split_piqps_piqpr,
    validate, write_instance,
)
from piqp_approx.oracle import brute_force

from conftest import naive_optimum


@st.composite
def instances(draw, max_n=7, max_p=3):
    n = draw(st.integers(1, max_n))
    p = draw(st.integers(1, max_p))
    upper = [[draw(st.integers(0, 9)) if j > i else 0 for j in range(n)] for i in range(n)]
    B = np.array(upper)
    B = B + B.T
    c = [draw(st.integers(0, 5)) for _ in range(n)]
    A = [[draw(st.integers(0, 9)) for _ in range(n)] for _ in range(p)]
    budgets = [draw(st.integers(1, 30)) for _ in range(p)]
    return PiqpInstance(B, c, A, budgets)


# -- validate ---------------------------------------------------------------------

def test_validate_reports_asymmetry():
    inst = PiqpInstance([[0, 2], [3, 0]], [0, 0], [[1, 1]], [2])
    errs = validate(inst)
    assert any("asymmetric at (0,1)" in e for e in errs)


def test_validate_accepts_all_zero_instance():
    inst = PiqpInstance(np.zeros((3, 3), int), [0, 0, 0], [[0, 0, 0]], [1])
    assert validate(inst) == []


def test_validate_rejects_zero_budget():
    inst = PiqpInstance([[0, 1], [1, 0]], [0, 0], [[1, 1], [1, 1]], [3, 0])
    errs = validate(inst)
    assert any("budget must be positive" in e and "1" in e for e in errs)


def test_validate_flags_diagonal_and_negative_entries():
    inst = PiqpInstance([[1, -1], [-1, 0]], [0, -2], [[1, -1]], [2])
    errs = " ".join(validate(inst))
    assert "diagonal at (0,0)" in errs
    assert "B: negative" in errs and "c: negative" in errs and "A: negative" in errs


def test_non_integer_data_rejected():
    with pytest.raises(InstanceError):
        PiqpInstance([[0, 0.5], [0.5, 0]], [0, 0], [[1, 1]], [2])


def test_instance_is_read_only():
    inst = PiqpInstance([[0, 1], [1, 0]], [0, 0], [[1, 1]], [2])
    with pytest.raises(ValueError):
        inst.B[0, 1] = 5


# -- scale ------------------------------------------------------------------------

def test_scale_formula_example():
    inst = PiqpInstance(np.zeros((1, 1), int), [0], [[3], [4]], [5, 10])
    s = scale(inst)
    assert s.W == 10
    assert s.A_hat.tolist() == [[6], [4]]
    assert s.a_max == 6


def test_scale_identity_for_equal_budgets():
    inst = generate("qkp", seed=3, n=6, p=1, density=0.5)
    s = scale(inst)
    assert np.array_equal(s.A_hat, inst.A)


def test_scale_uses_exact_ceiling_on_large_values():
    # 10**17 * 3 / 7 is not representable in a float; the integer ceiling must still be exact
    a, Wi, W = 10**12, 7, 3 * 10**5
    inst = PiqpInstance(np.zeros((1, 1), int), [0], [[a], [1]], [Wi, W])
    s = scale(inst)
    assert s.A_hat[0, 0] == -((-a * W) // Wi)


def test_scale_six_variable_example_frozen():
    inst = generate("qkp", seed=6, n=6, p=2, density=0.6)
    s = scale(inst)
    # reference values from plain enumeration of all 64 assignments
    assert naive_optimum(inst.B, inst.c, inst.A, inst.budgets)[0] == 15
    assert naive_optimum(s.B, s.c, s.A_hat, s.budgets)[0] == 15
    for bits in itertools.product((0, 1), repeat=6):
        x = np.array(bits)
        if np.all(s.A_hat @ x <= s.W):
            assert np.all(inst.A @ x <= inst.budgets)


@given(instances())
def test_scaling_bounds_and_soundness(inst):
    s = scale(inst)
    num = inst.A * s.W
    den = inst.budgets[:, None]
    assert np.all(s.A_hat * den >= num)
    pos = inst.A > 0
    assert np.all((s.A_hat * den < num + den)[pos])
    assert np.all(s.A_hat[~pos] == 0)
    assert s.a_max == (s.A_hat.max() if s.A_hat.size else 0)
    for bits in itertools.product((0, 1), repeat=inst.n):
        x = np.array(bits)
        if np.all(s.A_hat @ x <= s.W):
            assert np.all(inst.A @ x <= inst.budgets)


@given(instances(max_n=6))
def test_scaled_optimum_never_exceeds_original(inst):
    s = scale(inst)
    assert brute_force(s).optimum <= brute_force(inst).optimum


# -- prune ------------------------------------------------------------------------

def test_prune_drops_heavy_pair():
    B = np.zeros((3, 3), int)
    B[0, 1] = B[1, 0] = 9
    B[1, 2] = B[2, 1] = 4
    inst = PiqpInstance(B, [0, 0, 0], [[6, 6, 4]], [10])
    sp = prune_infeasible_pairs(scale(inst))
    assert sp.B[0, 1] == 0 and sp.B[1, 0] == 0
    assert sp.B[1, 2] == 4


def test_prune_leaves_light_instance_unchanged():
    inst = generate("qkp", seed=2, n=6, p=1, density=0.8, weight_range=(1, 1))
    inst = PiqpInstance(inst.B, inst.c, inst.A, [12])
    s = scale(inst)
    sp = prune_infeasible_pairs(s)
    assert np.array_equal(sp.B, s.B) and not sp.fixed.any()


def test_prune_forces_overweight_variable():
    inst = PiqpInstance([[0, 3], [3, 0]], [5, 1], [[1, 4], [1, 1]], [3, 3])
    sp = prune_infeasible_pairs(scale(inst))
    assert sp.fixed.tolist() == [False, True]
    assert sp.c[1] == 0 and sp.B[0, 1] == 0 and sp.A_hat[:, 1].tolist() == [0, 0]


def test_prune_eight_variable_example_frozen():
    inst = generate("qkp", seed=8, n=8, p=2, density=0.7)
    s = scale(inst)
    sp = prune_infeasible_pairs(s)
    assert int((sp.B != s.B).sum()) == 34
    assert naive_optimum(s.B, s.c, s.A_hat, s.budgets)[0] == 9
    assert brute_force(sp).optimum == 9


@given(instances(max_n=6))
def test_pruning_preserves_optimum(inst):
    s = scale(inst)
    assert brute_force(prune_infeasible_pairs(s)).optimum == brute_force(s).optimum


# -- split ------------------------------------------------------------------------

def test_split_without_heavy_variables():
    inst = PiqpInstance([[0, 2], [2, 0]], [0, 0], [[1, 2]], [6])
    s = scale(inst)
    light, heavy = split_piqps_piqpr(s)
    assert np.array_equal(light.B, s.B) and not light.fixed.any()
    assert heavy.fixed.all()


def test_split_variable_at_full_budget():
    inst = PiqpInstance([[0, 2, 1], [2, 0, 1], [1, 1, 0]], [0, 0, 0], [[10, 1, 2]], [10])
    light, heavy = split_piqps_piqpr(scale(inst))
    assert light.fixed.tolist() == [True, False, False]
    assert heavy.fixed.tolist() == [False, True, True]
    assert light.B[0].sum() == 0 and heavy.B[0].sum() == 0


def test_split_uses_strict_half():
    inst = PiqpInstance(np.zeros((2, 2), int), [0, 0], [[5, 6]], [10])
    assert heavy_set(scale(inst)).tolist() == [False, True]


@given(instances(max_n=6))
def test_split_parts_feasible_for_full(inst):
    s = prune_infeasible_pairs(scale(inst))
    light, heavy = split_piqps_piqpr(s)
    assert not (light.free & heavy.free).any()
    for part in (light, heavy):
        sol = brute_force(part).argmax
        assert evaluate(s, sol.x).feasible


# -- graph view, evaluate -------------------------------------------------------------

def test_graph_view():
    inst = PiqpInstance([[0, 2, 0], [2, 0, 1], [0, 1, 0]], [0, 0, 0], [[1, 2, 3], [0, 1, 1]], [5, 5])
    g = GraphView.of(inst)
    assert g.neighbors == ((1,), (0, 2), (1,))
    assert g.weight == (1, 3, 4)


@given(instances(max_n=6), st.data())
def test_evaluate_matches_recomputation(inst, data):
    x = np.array(data.draw(st.lists(st.integers(0, 1), min_size=inst.n, max_size=inst.n)))
    sol = evaluate(inst, x)
    quad = sum(int(inst.B[i, j]) for i in range(inst.n) for j in range(i + 1, inst.n) if x[i] and x[j])
    assert sol.quadratic == quad
    assert sol.symmetric_quadratic == int(x @ inst.B @ x)
    assert sol.objective == quad + int(inst.c @ x)
    assert list(sol.usage) == (inst.A @ x).tolist()
    assert sol.feasible == bool(np.all(inst.A @ x <= inst.budgets))


# -- generators -------------------------------------------------------------------

def test_clique_generator_k4():
    inst = generate("clique", edges=complete_graph(4), t=3)
    assert inst.budgets.tolist() == [3]
    assert inst.A.tolist() == [[1, 1, 1, 1]]
    assert not inst.c.any()
    assert brute_force(inst).optimum == 3


def test_dsp_with_k_equal_n_takes_everything():
    inst = generate("dsp", seed=4, n=9, density=0.5, k=9)
    assert brute_force(inst).optimum == int(inst.B.sum()) // 2


def test_generator_is_deterministic():
    a = generate("qkp", seed=11, n=12, p=2, density=0.4)
    b = generate("qkp", seed=11, n=12, p=2, density=0.4)
    assert dumps_instance(a) == dumps_instance(b)
    c = generate("qkp", seed=12, n=12, p=2, density=0.4)
    assert dumps_instance(a) != dumps_instance(c)


@pytest.mark.parametrize("kind,params", [
    ("qkp", dict(n=5, density=1.5)),
    ("qkp", dict(n=5, density=-0.1)),
    ("dsp", dict(n=5, density=0.5)),
    ("clique", dict(n=5, density=0.5, t=0)),
    ("nope", dict(n=5)),
])
def test_generator_rejects_bad_params(kind, params):
    with pytest.raises(InstanceError):
        generate(kind, seed=0, **params)


# -- file I/O -------------------------------------------------------------------------

def test_round_trip(tmp_path):
    inst = generate("qkp", seed=5, n=7, p=2, density=0.5, linear_range=(0, 4))
    path = tmp_path / "i.json"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_missing_budgets_named(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n": 1, "p": 1, "B": [[0]], "c": [0], "A": [[1]]}))
    with pytest.raises(InstanceError, match="budgets"):
        read_instance(path)


def test_negative_benefit_rejected(tmp_path):
    path = tmp_path / "neg.json"
    path.write_text(json.dumps({"n": 2, "p": 1, "B": [[0, -1], [-1, 0]], "c": [0, 0],
                                "A": [[1, 1]], "budgets": [2]}))
    with pytest.raises(InstanceError, match="negative"):
        read_instance(path)


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "n": 2,\n  "p": oops\n}')
    with pytest.raises(InstanceError, match="line 3"):
        read_instance(path)


def test_edge_list_form_expanded():
    d = {"n": 3, "p": 1, "edges": [[0, 1, 4], [1, 2, 2]], "c": [0, 0, 0], "A": [[1, 1, 1]], "budgets": [2]}
    inst = instance_from_dict(d)
    assert inst.B.tolist() == [[0, 4, 0], [4, 0, 2], [0, 2, 0]]


def test_diagonal_in_file_rejected():
    d = {"n": 2, "p": 1, "B": [[1, 0], [0, 0]], "c": [0, 0], "A": [[1, 1]], "budgets": [2]}
    with pytest.raises(InstanceError, match="diagonal"):
        instance_from_dict(d)
