"""Hyperbolic relaxation of the quadratic part.

With edge variables eliminated (x_uv = sqrt(x_u x_v) is optimal for nonnegative
benefits) the relaxation is the concave program

    maximize  sum_{u<v} b_uv sqrt(x_u x_v)   s.t.  A_hat x <= W,  0 <= x <= 1.

A log-barrier Newton phase first follows the central path to a near-optimal
interior point (the objective's curvature grows like x^(-3/2) near zero, which
stalls first-order steps).  Projected gradient ascent with Armijo backtracking
then finishes from that point and from the other starts; it lands exactly on
active box faces.  The projection onto the box-plus-rows polytope is computed
through its dual: one multiplier per row, updated by exact one-dimensional
solves on the piecewise linear row usage.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    rel_tol: float = 1e-7
    smoothing_eps: float = 1e-12
    seed: int = 0
    multistarts: int = 3

    def __post_init__(self):
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.smoothing_eps < 0:
            raise ValueError("smoothing_eps must be nonnegative")
        if self.max_iterations < 1 or self.multistarts < 1:
            raise ValueError("max_iterations and multistarts must be >= 1")


@dataclass(frozen=True)
class RelaxationSolution:
    x_star: np.ndarray
    edge_vals: dict
    value: float
    residuals: float
    iterations: int
    converged: bool
    history: tuple = field(repr=False, default=())
    start_values: tuple = ()


def relaxation_value(B, x) -> float:
    """sum_{u<v} b_uv sqrt(x_u x_v) for a full symmetric B."""
    x = np.asarray(x, dtype=float)
    return float(0.5 * np.sum(B * np.sqrt(np.outer(x, x))))


# -- projection ------------------------------------------------------------------

def _row_multiplier(r, a, cap, ub):
    """Smallest mu >= 0 with sum_j a_j clip(r_j - a_j mu, 0, ub_j) <= cap."""
    pos = a > 0
    if not pos.any():
        return 0.0

    def usage(mu):
        return np.clip(r[pos][None, :] - np.outer(mu, a[pos]), 0.0, ub[pos][None, :]) @ a[pos]

    if usage(np.zeros(1))[0] <= cap:
        return 0.0
    ap, rp, up = a[pos], r[pos], ub[pos]
    bps = np.concatenate([(rp - up) / ap, rp / ap])
    bps = np.unique(bps[bps > 0])
    bps = np.concatenate([[0.0], bps])
    vals = usage(bps)
    k = int(np.argmax(vals <= cap))  # first breakpoint where the row fits
    lo, hi = bps[k - 1], bps[k]
    vlo, vhi = vals[k - 1], vals[k]
    if vlo == vhi:
        return hi
    return lo + (vlo - cap) * (hi - lo) / (vlo - vhi)


def project(z, A, budgets, ub, sweeps: int = 200, tol: float = 1e-13, mu0=None,
            return_mu: bool = False):
    """Euclidean projection of z onto {0 <= y <= ub, A y <= budgets}.

    Dual coordinate ascent over the row multipliers; exact for a single row.
    ``mu0`` warm-starts the multipliers (successive projections of nearby
    points need only a sweep or two).
    """
    A = np.asarray(A, dtype=float)
    p = A.shape[0]
    mu = np.zeros(p) if mu0 is None else np.array(mu0, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    shift = A.T @ mu
    for _ in range(sweeps):
        moved = 0.0
        for i in range(p):
            r = z - shift + A[i] * mu[i]
            new = _row_multiplier(r, A[i], budgets[i], ub)
            moved = max(moved, abs(new - mu[i]))
            shift += A[i] * (new - mu[i])
            mu[i] = new
        if p <= 1 or moved <= tol * (1.0 + mu.max(initial=0.0)):
            break
    y = np.clip(z - shift, 0.0, ub)
    return (y, mu) if return_mu else y


def shrink_to_feasible(x, A, budgets):
    """Scale x down uniformly until every row satisfies A x <= budgets in floating point."""
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    for _ in range(60):
        use = A @ x
        over = use > budgets
        if not over.any():
            return x
        rho = float(np.max(use[over] / budgets[over]))
        x = x / (rho * (1 + 4e-16)) if rho > 1 else x * (1 - 1e-15)
    raise RuntimeError("could not restore feasibility")


# -- ascent -----------------------------------------------------------------------

class _Objective:
    def __init__(self, B, eps):
        self.B = np.asarray(B, dtype=float)
        self.eps = eps

    def value(self, x):
        return float(0.5 * np.sum(self.B * np.sqrt(np.outer(x, x) + self.eps)))

    def grad(self, x):
        M = np.sqrt(np.outer(x, x) + self.eps)
        with np.errstate(divide="ignore", invalid="ignore"):
            G = np.where(M > 0, self.B * x[None, :] / (2 * M), 0.0)
        return G.sum(axis=1)

    def hess(self, x):
        M = np.sqrt(np.outer(x, x) + self.eps)
        xx = np.outer(x, x)
        H = self.B * (1.0 / (2 * M) - xx / (4 * M**3))
        np.fill_diagonal(H, 0.0)
        H[np.diag_indices_from(H)] = -(self.B * (x[None, :] ** 2) / (4 * M**3)).sum(axis=1)
        return H


def _interior_point(A, budgets, n):
    rows = A.sum(axis=1)
    frac = min([1.0] + [budgets[i] / rows[i] for i in range(len(budgets)) if rows[i] > 0])
    return np.full(n, 0.5 * frac)


def _barrier_path(obj, A, budgets, gap_tol, x0=None, max_newton=500):
    """Central-path point of  t f(x) + sum log x + log(1-x) + sum_i log(W_i - a_i x).

    ``x0`` is any feasible point; it is averaged with a strictly interior
    point before the Newton steps.  Returns the last iterate.
    """
    n = obj.B.shape[0]
    x = _interior_point(A, budgets, n)
    if x0 is not None:
        x = 0.5 * (x + np.clip(x0, 0.0, 1.0))
    m = 2 * n + len(budgets)

    def phi(t, z):
        s = budgets - A @ z
        if np.any(z <= 0) or np.any(z >= 1) or np.any(s <= 0):
            return -np.inf
        return t * obj.value(z) + np.log(z).sum() + np.log1p(-z).sum() + np.log(s).sum()

    t = 1.0 / max(obj.value(x), 1e-12)
    steps = 0
    while steps < max_newton:
        while steps < max_newton:
            s = budgets - A @ x
            g = t * obj.grad(x) + 1 / x - 1 / (1 - x) - A.T @ (1 / s)
            H = t * obj.hess(x) - np.diag(1 / x**2 + 1 / (1 - x) ** 2) - (A.T / s**2) @ A
            try:
                d = np.linalg.solve(-H, g)
            except np.linalg.LinAlgError:
                d = g
            dec = float(g @ d)
            if dec / 2 <= 1e-9:
                break
            tau, f0 = 1.0, phi(t, x)
            while phi(t, x + tau * d) < f0 + 0.25 * tau * dec:
                tau *= 0.5
                if tau < 1e-14:
                    break
            steps += 1
            # roundoff floor: phi ~ t f leaves no room for further progress
            if tau < 1e-14 or tau * np.abs(d).max() <= 1e-15:
                break
            if tau < 1e-2 and dec / 2 <= 1e-6:
                break
            x = x + tau * d
        if m / t <= gap_tol * max(obj.value(x), 1e-300):
            break
        t *= 20.0
    return x


def _ascend(obj, x0, A, budgets, ub, cfg, sigma=1e-4):
    """Monotone projected gradient with Barzilai-Borwein trial steps."""
    x, mu = project(x0, A, budgets, ub, return_mu=True)
    f = obj.value(x)
    g = obj.grad(x)
    hist = [f]
    alpha = 1.0
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        while True:
            y, mu_y = project(x + alpha * g, A, budgets, ub, mu0=mu, return_mu=True)
            fy = obj.value(y)
            if fy >= f + sigma * float(g @ (y - x)):
                break
            alpha *= 0.5
            if alpha < 1e-18:
                y, fy, mu_y = x, f, mu
                break
        gain = fy - f
        if fy < f:
            y, fy = x, f
        gy = obj.grad(y)
        sx, sg = y - x, gy - g
        x, f, g, mu = y, fy, gy, mu_y
        hist.append(f)
        if gain <= cfg.rel_tol * max(abs(f), 1e-300):
            # small gain: accept only at a stationary point of the gradient mapping
            d = project(x + g, A, budgets, ub, mu0=mu) - x
            if float(g @ d) <= cfg.rel_tol * max(abs(f), 1e-300):
                converged = True
                break
        # ascent on a concave function: curvature along sx is -(sx . sg) >= 0
        curv = -float(sx @ sg)
        alpha = float(sx @ sx) / curv if curv > 0 else 2.0 * alpha
        alpha = min(max(alpha, 1e-10), 1e10)
    return x, it, converged, hist


def solve_relaxation(s, cfg: SolverConfig = SolverConfig(), starts=None) -> RelaxationSolution:
    """Maximize the concave relaxation over the scaled polytope.

    Starts: an interior uniform point, the greedy solution (pass it via
    ``starts`` or let the function compute it), and seeded random points for
    the remaining multistarts.  Each start is moved along the central path and
    then polished; the best end point is shrunk to exact feasibility.
    """
    n = s.n
    B = np.asarray(s.B, dtype=float)
    A = np.asarray(s.A, dtype=float).reshape(s.p, n)
    budgets = np.asarray(s.budgets, dtype=float)
    ub = np.where(np.asarray(s.fixed), 0.0, 1.0)
    obj = _Objective(B, cfg.smoothing_eps)

    if not B.any():
        x = np.zeros(n)
        x.setflags(write=False)
        return RelaxationSolution(x, {}, 0.0, 0.0, 0, True, (0.0,), (0.0,))

    # vertices without incident benefit only consume budget
    active = (ub > 0) & (B.sum(axis=1) > 0)
    ub = np.where(active, 1.0, 0.0)
    idx = np.flatnonzero(active)
    if starts is None:
        from .greedy import GreedyConfig, greedy_solve
        starts = [np.asarray(greedy_solve(s, GreedyConfig(t=1)).x, dtype=float)]
    start_list = [None] + [np.asarray(st, dtype=float) for st in starts]
    rng = np.random.default_rng(cfg.seed)
    while len(start_list) < cfg.multistarts:
        start_list.append(rng.uniform(0.0, 1.0, n) * ub)

    sub = _Objective(B[np.ix_(idx, idx)], cfg.smoothing_eps)
    warm = []
    for x0 in start_list:
        xb = np.zeros(n)
        if x0 is not None:
            x0 = shrink_to_feasible(np.clip(x0, 0.0, 1.0) * ub, A, budgets)[idx]
        xb[idx] = _barrier_path(sub, A[:, idx], budgets, gap_tol=cfg.rel_tol * 1e-2, x0=x0)
        warm.append(xb)

    best = None
    iters = 0
    start_values = []
    for x0 in warm:
        x, it, conv, hist = _ascend(obj, x0, A, budgets, ub, cfg)
        iters += it
        x = np.clip(shrink_to_feasible(x, A, budgets), 0.0, ub)
        val = relaxation_value(B, x)
        start_values.append(val)
        if best is None or val > best[1]:
            best = (x, val, conv, hist)
    x, val, conv, hist = best
    if not conv:
        log.warning("relaxation did not converge within %d iterations", cfg.max_iterations)
    x = x.copy()
    x.setflags(write=False)
    iu, iv = np.nonzero(np.triu(B) > 0)
    edges = {(int(u), int(v)): math.sqrt(x[u] * x[v]) for u, v in zip(iu, iv)}
    resid = float(np.max(A @ x - budgets, initial=-np.inf)) if s.p else 0.0
    return RelaxationSolution(
        x_star=x, edge_vals=edges, value=val, residuals=max(resid, 0.0),
        iterations=iters, converged=conv, history=tuple(hist), start_values=tuple(start_values),
    )


class BoundViolation(AssertionError):
    pass


def check_sqrt_budget_bound(rs: RelaxationSolution, s, beta) -> np.ndarray:
    """Per-row slack of  sum_u a_iu sqrt(x_u) <= 2 W sqrt(a_max n / beta).

    Holds at every feasible point when a_max <= beta <= W; a negative slack
    means the relaxation returned an infeasible point.
    """
    W = float(s.W)
    a_max = s.a_max
    if not (0 < beta <= W) or beta < a_max:
        raise ValueError(f"need a_max <= beta <= W, got a_max={a_max}, beta={beta}, W={W}")
    A = np.asarray(s.A, dtype=float).reshape(s.p, s.n)
    lhs = A @ np.sqrt(np.asarray(rs.x_star, dtype=float))
    rhs = 2.0 * W * math.sqrt(a_max * s.n / beta)
    slack = rhs - lhs
    if np.any(slack < 0):
        raise BoundViolation(f"square-root budget bound violated: lhs={lhs.tolist()} rhs={rhs}")
    return slack
