"""Multi-constraint 0-1 knapsack: LP vertex solution and (p+1)-rounding.

The LP  max b.x  s.t.  A x <= W,  0 <= x <= 1  is solved by a bounded-variable
primal simplex over ``fractions.Fraction`` with Bland's smallest-index rule.
Nonbasic variables sit at one of their bounds, so at most p (the number of
basic slots) structural coordinates can be fractional.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instance import BinarySolution, PiqpInstance, evaluate


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class MkpProblem:
    b: tuple
    A: tuple  # rows
    budgets: tuple

    def __init__(self, b, A, budgets):
        b = [int(v) for v in np.asarray(b).reshape(-1)]
        A = np.asarray(A, dtype=np.int64)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        if A.size == 0:
            A = A.reshape(len(np.asarray(budgets).reshape(-1)), len(b))
        budgets = [int(v) for v in np.asarray(budgets).reshape(-1)]
        if A.shape != (len(budgets), len(b)):
            raise ValueError(f"A has shape {A.shape}, expected ({len(budgets)}, {len(b)})")
        if min(b, default=0) < 0 or (A.size and A.min() < 0) or min(budgets, default=0) < 0:
            raise ValueError("MKP data must be nonnegative")
        for i, row in enumerate(A):
            for j, a in enumerate(row):
                if a > budgets[i]:
                    raise ValueError(f"item {j} alone exceeds budget {i} ({a} > {budgets[i]})")
        object.__setattr__(self, "b", tuple(b))
        object.__setattr__(self, "A", tuple(tuple(int(v) for v in row) for row in A))
        object.__setattr__(self, "budgets", tuple(budgets))

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def p(self) -> int:
        return len(self.budgets)

    def as_instance(self) -> PiqpInstance:
        n = self.n
        return PiqpInstance(np.zeros((n, n), dtype=np.int64), list(self.b),
                            np.array(self.A, dtype=np.int64).reshape(self.p, n), list(self.budgets))


@dataclass(frozen=True)
class VertexLpSolution:
    x: tuple  # Fractions
    value: Fraction
    fractional_set: tuple
    pivots: int


def solve_lp_vertex(prob: MkpProblem, max_pivots: int = 100_000) -> VertexLpSolution:
    n, p = prob.n, prob.p
    N = n + p  # structural then slack columns
    INF = None
    upper = [Fraction(1)] * n + [INF] * p
    cost = [Fraction(v) for v in prob.b] + [Fraction(0)] * p

    # tableau rows express basic variables: x_B[r] = rhs[r] - sum_j T[r][j] x_j over nonbasic j
    T = [[Fraction(prob.A[r][j]) for j in range(n)] + [Fraction(int(r == k)) for k in range(p)]
         for r in range(p)]
    basis = [n + r for r in range(p)]
    value = [Fraction(0)] * N  # current values of all variables
    for r in range(p):
        value[n + r] = Fraction(prob.budgets[r])
    in_basis = [False] * N
    for j in basis:
        in_basis[j] = True

    pivots = 0
    while True:
        # reduced costs d_j = c_j - c_B^T T[:, j]
        d = [cost[j] - sum(cost[basis[r]] * T[r][j] for r in range(p)) if not in_basis[j] else None
             for j in range(N)]
        enter = None
        for j in range(N):
            if in_basis[j]:
                continue
            at_upper = upper[j] is not None and value[j] == upper[j]
            if (not at_upper and d[j] > 0) or (at_upper and d[j] < 0):
                enter = j
                break
        if enter is None:
            break
        if pivots >= max_pivots:
            raise LpError("pivot limit reached")
        s = 1 if value[enter] == 0 else -1  # direction of movement for the entering var

        # bound flip candidate
        theta = upper[enter]  # may be None (slack): unbounded flip
        leave_row, leave_to = None, None
        for r in range(p):
            a = T[r][enter] * s  # basic var changes by -a * theta
            if a == 0:
                continue
            bv = basis[r]
            if a > 0:
                t = value[bv] / a
                tgt = Fraction(0)
            else:
                if upper[bv] is None:
                    continue
                t = (upper[bv] - value[bv]) / (-a)
                tgt = upper[bv]
            better = theta is None or t < theta or (
                t == theta and leave_row is not None and bv < basis[leave_row])
            if better:
                theta, leave_row, leave_to = t, r, tgt
        if theta is None:
            raise LpError("LP unbounded")  # cannot happen: slacks bound every direction

        for r in range(p):
            value[basis[r]] -= T[r][enter] * s * theta
        value[enter] += s * theta
        pivots += 1
        if leave_row is None:
            continue  # pure bound flip

        lv = basis[leave_row]
        value[lv] = leave_to
        piv = T[leave_row][enter]
        row = [v / piv for v in T[leave_row]]
        T[leave_row] = row
        for r in range(p):
            if r != leave_row and T[r][enter] != 0:
                f = T[r][enter]
                T[r] = [a - f * b for a, b in zip(T[r], row)]
        basis[leave_row] = enter
        in_basis[enter] = True
        in_basis[lv] = False

    x = tuple(value[:n])
    frac = tuple(j for j in range(n) if 0 < x[j] < 1)
    val = sum((Fraction(prob.b[j]) * x[j] for j in range(n)), Fraction(0))
    assert len(frac) <= p
    for r in range(p):
        assert sum(prob.A[r][j] * x[j] for j in range(n)) <= prob.budgets[r]
    return VertexLpSolution(x=x, value=val, fractional_set=frac, pivots=pivots)


@dataclass(frozen=True)
class MkpRounding:
    solution: BinarySolution
    lp: VertexLpSolution
    integral_part: tuple
    single_item: tuple
    chose: str  # "integral" or "single"


def round_p_plus_1_detail(prob: MkpProblem) -> MkpRounding:
    lp = solve_lp_vertex(prob)
    n = prob.n
    x_int = tuple(1 if lp.x[j] == 1 else 0 for j in range(n))
    x_single = (0,) * n
    if lp.fractional_set:
        # argmax b_j x_j over fractional coordinates; ties to the smallest index
        m = max(lp.fractional_set, key=lambda j: (prob.b[j] * lp.x[j], -j))
        x_single = tuple(int(j == m) for j in range(n))
    inst = prob.as_instance()
    s_int, s_single = evaluate(inst, x_int), evaluate(inst, x_single)
    assert s_int.feasible and s_single.feasible
    if s_single.objective > s_int.objective:
        return MkpRounding(s_single, lp, x_int, x_single, "single")
    return MkpRounding(s_int, lp, x_int, x_single, "integral")


def round_p_plus_1(prob: MkpProblem) -> BinarySolution:
    """Best of the integral part of an LP vertex and the best single fractional item.

    Value is at least LP/(p+1), hence at least OPT/(p+1).
    """
    return round_p_plus_1_detail(prob).solution


def mkp_from_instance(inst, linear=None) -> tuple[MkpProblem, np.ndarray]:
    """Linear-term knapsack over the items of ``inst`` that fit on their own.

    Returns the problem and the original indices of its items.
    """
    b = np.asarray(inst.c if linear is None else linear, dtype=np.int64)
    A = np.asarray(inst.A, dtype=np.int64)
    budgets = np.asarray(inst.budgets, dtype=np.int64)
    keep = np.all(A <= budgets[:, None], axis=0) & ~np.asarray(inst.fixed)
    idx = np.flatnonzero(keep)
    return MkpProblem(b[idx], A[:, idx], budgets), idx


def linear_solution(inst) -> BinarySolution:
    """Approximate the linear part of an instance on its own constraints."""
    prob, idx = mkp_from_instance(inst)
    x = np.zeros(inst.n, dtype=np.int64)
    if len(idx):
        sub = round_p_plus_1(prob)
        x[idx] = sub.x
    return evaluate(inst, x)
