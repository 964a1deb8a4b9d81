import itertools
import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from piqp_approx.instance import PiqpInstance, generate

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

logging.getLogger("piqp_approx").setLevel(logging.ERROR)


def naive_optimum(B, c, A, budgets, fixed=None, quadratic_only=False):
    """Plain itertools enumeration, independent of the Gray-code oracle."""
    B, c, A = np.asarray(B), np.asarray(c), np.atleast_2d(np.asarray(A))
    budgets = np.asarray(budgets)
    n = len(c)
    best, arg = None, None
    for bits in itertools.product((0, 1), repeat=n):
        x = np.array(bits)
        if fixed is not None and np.any(x[np.asarray(fixed)]):
            continue
        if np.all(A @ x <= budgets):
            v = int(x @ B @ x) // 2 + (0 if quadratic_only else int(c @ x))
            if best is None or v > best:
                best, arg = v, x
    return best, arg


def suite_instances(count=510, n_range=(4, 10), seed0=1000):
    """The random desk-scale suite: qkp instances with weights and benefits in [1, 9]."""
    rng = np.random.default_rng(seed0)
    out = []
    for k in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        p = 1 + k % 2
        density = float(rng.uniform(0.3, 1.0))
        out.append(generate("qkp", seed=seed0 + k, n=n, p=p, density=density))
    return out


@pytest.fixture
def k4_clique():
    from piqp_approx.instance import complete_graph
    return generate("clique", edges=complete_graph(4), t=3)


@pytest.fixture
def single_edge():
    def make(budget):
        return PiqpInstance([[0, 1], [1, 0]], [0, 0], [[1, 1]], [budget])
    return make


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
