"""Exhaustive solvers used as ground truth.

Assignments over the free variables are encoded as integers whose most
significant bit is the lowest-index free variable, so "smallest code" and
"lexicographically smallest x" coincide.  The low ``LOW_BITS`` variables are
tabulated once; the remaining high variables are walked in Gray-code order and
their contribution (objective, cross benefits, usage) is updated by one column
per step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import BinarySolution, PiqpInstance, evaluate

LOW_BITS = 14
DEFAULT_LIMIT = 24


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    optimum: int
    argmax: BinarySolution
    count_explored: int


def _bit_table(m: int) -> np.ndarray:
    """Rows are all 2**m assignments in increasing code order (column 0 is the MSB)."""
    codes = np.arange(1 << m, dtype=np.int64)
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.int64)


def _enumerate(B, c, A, budgets, free_idx, quadratic_only=False):
    """Return (best value, best x over free_idx, count) for the 0-1 program."""
    m = len(free_idx)
    Bf = B[np.ix_(free_idx, free_idx)]
    cf = np.zeros(m, dtype=np.int64) if quadratic_only else c[free_idx]
    Af = A[:, free_idx]

    L = min(m, LOW_BITS)
    H = m - L
    hi_idx = np.arange(H)
    lo_idx = np.arange(H, m)

    X = _bit_table(L)
    Bll = Bf[np.ix_(lo_idx, lo_idx)]
    low_obj = ((X @ Bll) * X).sum(axis=1) // 2 + X @ cf[lo_idx]
    low_use = X @ Af[:, lo_idx].T  # (2**L, p)
    Blh = Bf[np.ix_(lo_idx, hi_idx)]

    hi_state = np.zeros(H, dtype=np.int64)
    cross = np.zeros(L, dtype=np.int64)  # B[lo, selected high]
    hi_obj = 0
    hi_use = np.zeros(len(budgets), dtype=np.int64)

    best_val = None
    best_code = None
    for step in range(1 << H):
        if step:
            # Gray code: flip the bit at the position of the lowest set bit of step
            k = (step & -step).bit_length() - 1
            h = H - 1 - k  # high variable whose code bit is k
            sign = 1 - 2 * hi_state[h]
            hi_obj += sign * (int(Bf[h, hi_idx] @ hi_state) + int(cf[h]))
            hi_state[h] ^= 1
            cross += sign * Blh[:, h]
            hi_use += sign * Af[:, h]
        total = low_obj + X @ cross + hi_obj
        ok = np.all(low_use + hi_use <= budgets, axis=1)
        if not ok.any():
            continue
        vals = np.where(ok, total, np.iinfo(np.int64).min)
        j = int(np.argmax(vals))  # first max == smallest low code
        v = int(vals[j])
        hcode = 0
        for bit in hi_state:
            hcode = (hcode << 1) | int(bit)
        code = (hcode << L) | j
        if best_val is None or v > best_val or (v == best_val and code < best_code):
            best_val, best_code = v, code

    x = np.zeros(m, dtype=np.int64)
    for k in range(m):
        x[k] = (best_code >> (m - 1 - k)) & 1
    return best_val, x, 1 << m


def brute_force(problem, limit_n: int = DEFAULT_LIMIT, quadratic_only: bool = False) -> OracleResult:
    """Exact optimum of a PiqpInstance or ScaledInstance by enumeration.

    Only free variables are enumerated; fixed ones stay at 0.  With
    ``quadratic_only`` the linear term is ignored when ranking assignments
    (the returned solution still reports it).
    """
    free_idx = np.flatnonzero(~np.asarray(problem.fixed))
    if len(free_idx) > limit_n:
        raise OracleLimitError(f"{len(free_idx)} free variables exceed limit_n={limit_n}")
    B = np.asarray(problem.B, dtype=np.int64)
    c = np.asarray(problem.c, dtype=np.int64)
    A = np.asarray(problem.A, dtype=np.int64).reshape(problem.p, problem.n)
    budgets = np.asarray(problem.budgets, dtype=np.int64)
    val, xf, count = _enumerate(B, c, A, budgets, free_idx, quadratic_only)
    x = np.zeros(problem.n, dtype=np.int64)
    x[free_idx] = xf
    sol = evaluate(problem, x)
    assert sol.feasible
    assert val == (sol.quadratic if quadratic_only else sol.objective)
    return OracleResult(optimum=val, argmax=sol, count_explored=count)


def brute_force_mkp(b, A, budgets, limit_n: int = DEFAULT_LIMIT) -> OracleResult:
    """Exact 0-1 optimum of the linear multi-constraint knapsack."""
    b = np.asarray(b, dtype=np.int64)
    A = np.atleast_2d(np.asarray(A, dtype=np.int64))
    n = b.shape[0]
    inst = PiqpInstance(np.zeros((n, n), dtype=np.int64), b, A, np.asarray(budgets).reshape(-1))
    return brute_force(inst, limit_n=limit_n)
