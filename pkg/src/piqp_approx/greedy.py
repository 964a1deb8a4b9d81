"""Greedy subset heuristic on the graph view of a scaled instance.

Each round adds the group of new vertices whose marginal edge benefit per unit
of combined weight is largest.  Ratios are compared by integer
cross-multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instance import BinarySolution, GraphView, evaluate

INF = math.inf


@dataclass(frozen=True)
class GreedyConfig:
    """``t`` is the guarantee parameter of the (8 p min(n, W) / t) bound.

    Candidate groups have up to ``t + 1`` vertices: a group must contain an edge
    to earn anything, and the bound is stated after shifting the group size
    down by one.
    """

    t: int = 2
    tie_break: str = "lex"

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if self.tie_break != "lex":
            raise ValueError(f"unknown tie_break {self.tie_break!r}")

    @property
    def subset_cap(self) -> int:
        return self.t + 1


def marginal_ratio(S, T, view: GraphView):
    """Delta b(T | S) / w(T) as a Fraction; +inf when w(T) = 0 and the gain is positive."""
    S, T = set(S), list(T)
    B = view.benefit
    gain = 0
    for k, v in enumerate(T):
        gain += sum(B[u][v] for u in S)
        gain += sum(B[u][v] for u in T[:k])
    w = sum(view.weight[v] for v in T)
    if w == 0:
        return INF if gain > 0 else Fraction(0)
    return Fraction(gain, w)


def _cmp(g1, w1, g2, w2) -> int:
    """Three-way compare of g1/w1 and g2/w2; weight 0 means +inf (positive gain) or 0."""
    inf1, inf2 = w1 == 0 and g1 > 0, w2 == 0 and g2 > 0
    if inf1 or inf2:
        return int(inf1) - int(inf2)
    if w1 == 0:
        g1, w1 = 0, 1
    if w2 == 0:
        g2, w2 = 0, 1
    lhs, rhs = g1 * w2, g2 * w1
    return (lhs > rhs) - (lhs < rhs)


def _best_group(cands, cap, gain, Bl, Al, w, budgets):
    """Best-ratio feasible group T (as a tuple) among ``cands``; None if none has positive gain."""
    best = None  # (gain, weight, tuple)
    p = len(Al)

    def visit(start, T, g, wt, use):
        nonlocal best
        for k in range(start, len(cands)):
            v = cands[k]
            nu = [use[i] + Al[i][v] for i in range(p)]
            if any(nu[i] > budgets[i] for i in range(p)):
                continue
            ng = g + gain[v] + sum(Bl[u][v] for u in T)
            nw = wt + w[v]
            nT = T + (v,)
            if ng > 0:
                order = 1 if best is None else _cmp(ng, nw, best[0], best[1])
                if order > 0 or (order == 0 and nT < best[2]):
                    best = (ng, nw, nT)
            if len(nT) < cap:
                visit(k + 1, nT, ng, nw, nu)

    visit(0, (), 0, 0, [0] * p)
    return best


def _best_group_np(cands, cap, gain, B, A, w, budgets):
    """Vectorized ``_best_group`` for groups of at most three vertices.

    Ratios are compared as floats.  With gains and weights below 2**24 two
    distinct fractions g/w differ in relative terms by more than 2**-48, so
    correctly rounded quotients tie exactly when the fractions do.
    """
    c = np.asarray(cands)
    m = len(c)
    g1 = np.asarray(gain, dtype=np.int64)[c]
    w1 = np.asarray(w, dtype=np.int64)[c]
    Bc = B[np.ix_(c, c)]
    Ac = A[:, c]
    cap_b = np.asarray(budgets, dtype=np.int64)
    best = [None, None]  # (ratio, tuple)

    def ratio(g, wt, ok):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(wt > 0, g / np.where(wt > 0, wt, 1), np.inf)
        return np.where(ok & (g > 0), r, -np.inf)

    def offer(r, idx, g, wt):
        k = int(np.argmax(r))  # first maximum in row-major order is lexicographically smallest
        if r.flat[k] == -np.inf:
            return
        pos = np.unravel_index(k, r.shape)
        T = tuple(int(c[v]) for v in idx(pos))
        rv = float(r.flat[k])
        if best[0] is None or rv > best[0] or (rv == best[0] and T < best[1][2]):
            best[0], best[1] = rv, (int(g.flat[k]), int(wt.flat[k]), T)

    ok1 = np.all(Ac <= cap_b[:, None], axis=0)
    offer(ratio(g1, w1, ok1), lambda pos: pos, g1, w1)
    if cap >= 2 and m >= 2:
        g2 = g1[:, None] + g1[None, :] + Bc
        w2 = w1[:, None] + w1[None, :]
        ok2 = np.triu(np.ones((m, m), dtype=bool), k=1) & ok1[:, None] & ok1[None, :]
        for r in range(Ac.shape[0]):
            ok2 &= Ac[r][:, None] + Ac[r][None, :] <= cap_b[r]
        offer(ratio(g2, w2, ok2), lambda pos: pos, g2, w2)
        if cap >= 3:
            for i in range(m - 2):
                sl = slice(i + 1, m)
                G = g2[i, sl][:, None] + g1[None, sl] + Bc[i, sl][None, :] + Bc[sl, sl]
                Wt = w2[i, sl][:, None] + w1[None, sl]
                ok = ok2[i, sl][:, None] & ok2[sl, sl]
                for r in range(Ac.shape[0]):
                    ok &= Ac[r, i] + Ac[r, sl][:, None] + Ac[r, sl][None, :] <= cap_b[r]
                offer(ratio(G, Wt, ok), lambda pos, i=i: (i, i + 1 + pos[0], i + 1 + pos[1]), G, Wt)
    return best[1]


def _small_enough(B, w, cap) -> bool:
    return cap <= 3 and int(B.sum()) + 1 < 2**24 and cap * int(np.max(w, initial=0)) < 2**24


def _induced_benefit(Bl, S) -> int:
    S = sorted(S)
    return sum(Bl[u][v] for i, u in enumerate(S) for v in S[i + 1:])


def greedy_solve(s, cfg: GreedyConfig = GreedyConfig()) -> BinarySolution:
    """Greedy on a (pruned) scaled instance; only free variables are used.

    Any object with ``B, A, budgets, fixed`` works, so the unscaled instance can
    be handled as well (rows keep their own budgets).

    Groups are restricted to those that are feasible on their own.  When the
    chosen group no longer fits next to S, the better of S and the group is
    kept.  The result is then made maximal by adding any remaining vertex that
    still fits (in index order), which never lowers the benefit.
    """
    n = s.n
    W = [int(v) for v in s.budgets]
    Bl = np.asarray(s.B).tolist()
    Al = np.asarray(s.A).tolist()
    w = GraphView.of(s).weight
    free = [v for v in range(n) if not s.fixed[v]]
    Bn = np.asarray(s.B, dtype=np.int64)
    An = np.asarray(s.A, dtype=np.int64).reshape(s.p, n)
    fast = _small_enough(Bn, w, cfg.subset_cap)

    S = []
    in_S = [False] * n
    gain = [0] * n
    use = [0] * s.p
    while True:
        cands = [v for v in free if not in_S[v]]
        if not cands:
            break
        if fast:
            best = _best_group_np(cands, cfg.subset_cap, gain, Bn, An, w, W)
        else:
            best = _best_group(cands, cfg.subset_cap, gain, Bl, Al, w, W)
        if best is None:
            break
        T = best[2]
        tu = [sum(Al[i][v] for v in T) for i in range(s.p)]
        if all(use[i] + tu[i] <= W[i] for i in range(s.p)):
            for v in T:
                in_S[v] = True
                S.append(v)
                for u in range(n):
                    gain[u] += Bl[v][u]
            use = [use[i] + tu[i] for i in range(s.p)]
            continue
        if _induced_benefit(Bl, T) > _induced_benefit(Bl, S):
            S, use = list(T), tu
            in_S = [False] * n
            for v in S:
                in_S[v] = True
        break

    for v in free:
        if not in_S[v] and all(use[i] + Al[i][v] <= W[i] for i in range(s.p)):
            in_S[v] = True
            use = [use[i] + Al[i][v] for i in range(s.p)]

    x = np.array(in_S, dtype=np.int64)
    sol = evaluate(s, x)
    assert sol.feasible
    return sol


def greedy_budget_certificate(sol: BinarySolution, s) -> bool:
    """All free variables selected, or some row uses at least half the budget."""
    free = ~np.asarray(s.fixed)
    x = np.asarray(sol.x)
    if np.all(x[free] == 1):
        return True
    usage = np.asarray(s.A) @ x
    return bool(np.any(2 * usage >= s.W))


def greedy_bound(p: int, n: int, W: int, t: int) -> float:
    """The guarantee factor 8 p min(n, W) / t."""
    return 8 * p * min(n, W) / t
