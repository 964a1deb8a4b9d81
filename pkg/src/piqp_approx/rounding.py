"""Randomized rounding of the relaxation, its deterministic fallbacks, and the
orchestrator that combines every strategy into one report.

Rounding draws Y_u = 1 with probability sqrt(x_u)/lambda, independently per
vertex.  With lambda = 2 sqrt(a_max n / beta) the expected weight of each row
stays within W, while the expected benefit is the relaxation value divided by
lambda**2.  Two fallbacks cover the regimes where that expectation is not
concentrated: the single most valuable edge, and a knapsack over the
neighbourhood of one well-connected vertex.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import instance as ins
from .greedy import GreedyConfig, greedy_solve
from .instance import BinarySolution, PiqpInstance, evaluate, zero_solution
from .mkp import MkpProblem, linear_solution, mkp_from_instance, round_p_plus_1_detail, solve_lp_vertex
from .relaxation import RelaxationSolution, SolverConfig, solve_relaxation

CASES = ("i", "ii", "iii", "iv")
FAVOURED = {"i": "edge", "ii": "rounding", "iii": "rounding", "iv": "local", "degenerate": None}


@dataclass(frozen=True)
class RoundingConfig:
    """``beta`` defaults to the common scaled budget W, ``trials`` to ceil(n**0.6).

    ``delta`` only enters the diagnostics (a trial counts as near-feasible when
    every row stays within (1 + delta) W).  With ``repair`` off, infeasible
    trials are discarded instead of repaired.
    """

    beta: float | None = None
    trials: int | None = None
    delta: float = 0.1
    seed: int = 0
    gamma: float = 0.1
    repair: bool = True

    def __post_init__(self):
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.beta is not None and self.beta <= 0:
            raise ValueError("beta must be positive")

    def trial_count(self, n: int) -> int:
        return self.trials if self.trials is not None else default_trials(n)

    def beta_for(self, s) -> float:
        beta = float(s.W) if self.beta is None else float(self.beta)
        if beta < s.a_max:
            raise ValueError(f"beta={beta} is below a_max={s.a_max}")
        return beta


def default_trials(n: int, eps: float = 0.1) -> int:
    return max(1, math.ceil(n ** (0.5 + eps)))


@dataclass(frozen=True)
class TrialStats:
    objectives: tuple
    usages: tuple
    feasible: tuple
    near_feasible: tuple = ()

    @property
    def count(self) -> int:
        return len(self.objectives)

    @property
    def feasibility_rate(self) -> float:
        return sum(self.feasible) / self.count if self.count else 0.0

    @property
    def mean_objective(self) -> float:
        return float(np.mean(self.objectives)) if self.count else 0.0

    @property
    def mean_usage(self) -> tuple:
        if not self.count:
            return ()
        return tuple(float(v) for v in np.mean(np.asarray(self.usages, dtype=float), axis=0))

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "feasibility_rate": self.feasibility_rate,
            "near_feasibility_rate": (sum(self.near_feasible) / self.count
                                      if self.count and self.near_feasible else 0.0),
            "mean_objective": self.mean_objective,
            "mean_usage": list(self.mean_usage),
            "objectives": list(self.objectives),
        }


# -- rounding ------------------------------------------------------------------------

def compute_lambda(s, beta) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    return max(1.0, 2.0 * math.sqrt(s.a_max * s.n / beta))


def rounding_probabilities(rs: RelaxationSolution, lam: float) -> np.ndarray:
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    x = np.clip(np.asarray(rs.x_star, dtype=float), 0.0, 1.0)
    return np.minimum(1.0, np.sqrt(x) / lam)


def round_once(rs: RelaxationSolution, lam: float, rng, s) -> BinarySolution:
    """One independent draw; the result may violate the budgets."""
    prob = rounding_probabilities(rs, lam)
    y = (rng.random(prob.shape[0]) < prob).astype(np.int64)
    return evaluate(s, y)


@dataclass(frozen=True)
class MonteCarlo:
    trials: int
    mean_objective: float
    se_objective: float
    mean_usage: np.ndarray
    se_usage: np.ndarray
    expected_objective: float
    expected_usage: np.ndarray


def monte_carlo(rs: RelaxationSolution, s, lam: float, trials: int, seed: int = 0,
                batch: int = 20_000) -> MonteCarlo:
    """Sample many roundings at once; returns means, standard errors and exact expectations."""
    prob = rounding_probabilities(rs, lam)
    B = np.asarray(s.B, dtype=np.int64)
    A = np.asarray(s.A, dtype=np.int64).reshape(s.p, s.n)
    rng = np.random.default_rng(seed)
    F, G = [], []
    left = trials
    while left > 0:
        m = min(batch, left)
        Y = (rng.random((m, s.n)) < prob).astype(np.int64)
        F.append(((Y @ B) * Y).sum(axis=1) // 2)
        G.append(Y @ A.T)
        left -= m
    F = np.concatenate(F).astype(float)
    G = np.concatenate(G).astype(float)
    root = math.sqrt(trials)
    return MonteCarlo(
        trials=trials,
        mean_objective=float(F.mean()),
        se_objective=float(F.std(ddof=1) / root) if trials > 1 else 0.0,
        mean_usage=G.mean(axis=0),
        se_usage=G.std(axis=0, ddof=1) / root if trials > 1 else np.zeros(s.p),
        expected_objective=float(0.5 * prob @ B @ prob),
        expected_usage=A @ prob,
    )


def repair_infeasible(y: BinarySolution, s) -> BinarySolution:
    """Drop vertices until the solution fits.

    Each step removes the selected vertex with the smallest marginal benefit per
    unit of overshoot-weighted weight; ties go to the larger index.
    """
    x = np.array(y.x, dtype=np.int64)
    x[np.asarray(s.fixed) & (x == 1)] = 0
    B = np.asarray(s.B, dtype=np.int64)
    c = np.asarray(s.c, dtype=np.int64)
    A = np.asarray(s.A, dtype=np.int64).reshape(s.p, s.n)
    budgets = np.asarray(s.budgets, dtype=np.int64)
    while True:
        over = np.maximum(A @ x - budgets, 0)
        if not over.any():
            return evaluate(s, x)
        sel = np.flatnonzero(x)
        gain = B[sel] @ x + c[sel]
        cost = over @ A[:, sel]
        best = None
        for k in range(len(sel) - 1, -1, -1):
            if cost[k] <= 0:
                continue
            # gain/cost smaller than the incumbent's, compared exactly
            if best is None or gain[k] * cost[best] < gain[best] * cost[k]:
                best = k
        x[sel[best]] = 0


def best_edge_solution(s) -> BinarySolution:
    """Both endpoints of the most valuable edge whose pair fits; ties to the smallest (i, j)."""
    B = np.asarray(s.B, dtype=np.int64)
    A = np.asarray(s.A, dtype=np.int64).reshape(s.p, s.n)
    budgets = np.asarray(s.budgets, dtype=np.int64)
    free = ~np.asarray(s.fixed)
    ok = np.triu(B > 0, k=1) & free[:, None] & free[None, :]
    for row, cap in zip(A, budgets):
        ok &= (row[:, None] + row[None, :]) <= cap
    if not ok.any():
        return zero_solution(s)
    vals = np.where(ok, B, -1)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x = np.zeros(s.n, dtype=np.int64)
    x[[i, j]] = 1
    return evaluate(s, x)


@dataclass(frozen=True)
class LocalKnapsack:
    solution: BinarySolution
    center: int | None
    lp_value: float
    neighbours: tuple


def local_knapsack_detail(s, rs: RelaxationSolution, lam: float) -> LocalKnapsack:
    B = np.asarray(s.B, dtype=np.int64)
    A = np.asarray(s.A, dtype=np.int64).reshape(s.p, s.n)
    free = ~np.asarray(s.fixed)
    active = free & (B.sum(axis=1) > 0)
    if not active.any():
        return LocalKnapsack(zero_solution(s), None, 0.0, ())
    score = B @ np.sqrt(np.clip(np.asarray(rs.x_star, dtype=float), 0, 1)) / lam
    score = np.where(active, score, -np.inf)
    v = int(np.argmax(score))
    caps = np.asarray(s.budgets, dtype=np.int64) - A[:, v]
    if np.any(caps < 0):
        raise ValueError(f"center {v} alone exceeds a budget")
    nb = np.flatnonzero((B[v] > 0) & free)
    prob = MkpProblem(B[v, nb], A[:, nb], caps)
    detail = round_p_plus_1_detail(prob)
    x = np.zeros(s.n, dtype=np.int64)
    x[v] = 1
    x[nb] = detail.solution.x
    sol = evaluate(s, x)
    assert sol.feasible
    return LocalKnapsack(sol, v, float(detail.lp.value), tuple(int(u) for u in nb))


def local_knapsack_solution(s, rs: RelaxationSolution, lam: float) -> BinarySolution:
    """Center v maximizing sum_u b_uv sqrt(x_u)/lambda plus a knapsack over its neighbours."""
    return local_knapsack_detail(s, rs, lam).solution


# -- diagnostics -------------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostics:
    label: str
    eps0: float
    eps1: float
    eps2: float
    log_factor: float

    @property
    def favoured(self):
        return FAVOURED[self.label]

    def to_dict(self) -> dict:
        return {"case": self.label, "eps0": self.eps0, "eps1": self.eps1, "eps2": self.eps2,
                "log_factor": self.log_factor, "favoured": self.favoured}


def concentration_diagnostics(rs: RelaxationSolution, s, cfg: RoundingConfig = RoundingConfig(),
                              lam: float | None = None) -> Diagnostics:
    """Expectation, heaviest neighbourhood mass and largest edge benefit, plus the case label.

    (i)   eps2 > eps1 and eps0 <  eps2 L   best edge
    (ii)  eps2 > eps1 and eps0 >= eps2 L   rounding
    (iii) eps1 >= eps2 and eps0 >= eps1 L  rounding
    (iv)  eps1 >= eps2 and eps0 <  eps1 L  local knapsack
    with L = (ln n)**(2 + gamma).
    """
    if lam is None:
        lam = compute_lambda(s, cfg.beta_for(s))
    B = np.asarray(s.B, dtype=float)
    prob = rounding_probabilities(rs, lam)
    eps0 = float(rs.value) / lam**2
    eps1 = float((B @ prob).max(initial=0.0))
    eps2 = float(B.max(initial=0.0))
    L = math.log(s.n) ** (2 + cfg.gamma) if s.n > 1 else 0.0
    if eps2 == 0:
        label = "degenerate"
    elif eps2 > eps1:
        label = "i" if eps0 < eps2 * L else "ii"
    else:
        label = "iii" if eps0 >= eps1 * L else "iv"
    return Diagnostics(label, eps0, eps1, eps2, L)


# -- orchestrator -----------------------------------------------------------------

METHODS = ("auto", "socp", "greedy", "edge", "local")


@dataclass(frozen=True)
class SolveConfig:
    """Everything ``solve_auto`` needs.

    ``extra_candidates`` also runs the strategies on the unsplit scaled
    instance and runs greedy / best edge on the original rows; turning it off
    leaves exactly the split pipeline.
    """

    greedy: GreedyConfig = GreedyConfig()
    solver: SolverConfig = SolverConfig()
    rounding: RoundingConfig = RoundingConfig()
    method: str = "auto"
    extra_candidates: bool = True
    upper_bound: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")


@dataclass(frozen=True)
class SolveReport:
    value: int
    x: tuple
    strategy: str
    quadratic: int
    linear: int
    usage: tuple
    feasible: bool
    strategy_values: dict
    method_values: dict
    upper_bound: float | None
    upper_bound_scaled: float | None
    trial_stats: dict
    case_label: dict
    diagnostics: dict
    lambdas: dict
    beta: float
    trials: int
    in_log_regime: bool
    converged: bool
    timings: dict = field(default_factory=dict, compare=False)

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "value": self.value, "x": list(self.x), "strategy": self.strategy,
            "quadratic": self.quadratic, "linear": self.linear, "usage": list(self.usage),
            "feasible": self.feasible, "strategy_values": self.strategy_values,
            "method_values": self.method_values, "upper_bound": self.upper_bound,
            "upper_bound_scaled": self.upper_bound_scaled, "trial_stats": self.trial_stats,
            "case_label": self.case_label, "diagnostics": self.diagnostics,
            "lambda": self.lambdas, "beta": self.beta, "trials": self.trials,
            "in_log_regime": self.in_log_regime, "converged": self.converged,
        }
        if timing:
            d["timings"] = self.timings
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2) + "\n"


def _rounding_trials(part, rs, lam, k, seq, repair, delta):
    best = None
    F, G, ok, near = [], [], [], []
    limit = (1 + delta) * part.W
    for child in seq.spawn(k):
        y = round_once(rs, lam, np.random.default_rng(child), part)
        F.append(y.objective)
        G.append(y.usage)
        ok.append(y.feasible)
        near.append(all(u <= limit for u in y.usage))
        if not y.feasible:
            if not repair:
                continue
            y = repair_infeasible(y, part)
        if best is None or y.objective > best.objective:
            best = y
    stats = TrialStats(tuple(F), tuple(tuple(g) for g in G), tuple(ok), tuple(near))
    return (best if best is not None else zero_solution(part)), stats


def _parts(s, extra):
    light, heavy = ins.split_piqps_piqpr(s)
    out = [("PIQPS", light), ("PIQPR", heavy)]
    if extra:
        out.append(("full", s))
    return out


def solve_auto(inst: PiqpInstance, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    """Run every requested strategy and keep the best solution that fits the original rows.

    Candidates are compared by total objective in original units; the first
    candidate in a fixed order wins ties, and a zero-valued best is reported
    as the all-zero vector.
    """
    ins.check(inst)
    clock = {}
    t0 = time.perf_counter()
    s = ins.prune_infeasible_pairs(ins.scale(inst))
    clock["scale"] = time.perf_counter() - t0
    method = cfg.method
    rcfg = cfg.rounding
    beta = rcfg.beta_for(s)
    k = rcfg.trial_count(inst.n)
    want = {m: method in ("auto", m) for m in ("greedy", "edge", "socp", "local")}
    need_rs = want["socp"] or want["local"]

    cands = []  # (name, x on original indices)
    converged = True
    trial_stats, labels, diags, lambdas = {}, {}, {}, {}

    if method == "auto" and np.any(inst.c):
        cands.append(("linear", np.asarray(linear_solution(inst).x)))

    seqs = np.random.SeedSequence(rcfg.seed).spawn(3)
    if s.B.any():
        for (name, part), seq in zip(_parts(s, cfg.extra_candidates), seqs):
            t1 = time.perf_counter()
            if want["greedy"]:
                cands.append((f"{name}:greedy", np.asarray(greedy_solve(part, cfg.greedy).x)))
            if want["edge"]:
                cands.append((f"{name}:edge", np.asarray(best_edge_solution(part).x)))
            if need_rs and part.B.any():
                rs = solve_relaxation(part, cfg.solver)
                converged &= rs.converged
                lam = compute_lambda(part, beta)
                lambdas[name] = lam
                d = concentration_diagnostics(rs, part, rcfg, lam)
                labels[name] = d.label
                diags[name] = d.to_dict()
                if want["socp"]:
                    best, stats = _rounding_trials(part, rs, lam, k, seq, rcfg.repair, rcfg.delta)
                    trial_stats[name] = stats.to_dict()
                    cands.append((f"{name}:rounding", np.asarray(best.x)))
                if want["local"]:
                    cands.append((f"{name}:local",
                                  np.asarray(local_knapsack_solution(part, rs, lam).x)))
            clock[name] = time.perf_counter() - t1
        if cfg.extra_candidates:
            if want["greedy"]:
                cands.append(("original:greedy", np.asarray(greedy_solve(inst, cfg.greedy).x)))
            if want["edge"]:
                cands.append(("original:edge", np.asarray(best_edge_solution(inst).x)))

    best_name, best = "zero", zero_solution(inst)
    values = {}
    for name, x in cands:
        sol = evaluate(inst, x)
        if not sol.feasible:
            raise AssertionError(f"strategy {name} produced an infeasible solution")
        values[name] = sol.objective
        if sol.objective > best.objective:
            best_name, best = name, sol
    by_method = {}
    for name, v in values.items():
        m = name.split(":")[-1]
        by_method[m] = max(by_method.get(m, 0), v)

    ub = ubs = None
    if cfg.upper_bound:
        t1 = time.perf_counter()
        ub, ubs, ok = upper_bounds(inst, s, cfg.solver)
        converged &= ok
        clock["upper_bound"] = time.perf_counter() - t1
    clock["total"] = time.perf_counter() - t0

    return SolveReport(
        value=best.objective, x=best.x, strategy=best_name, quadratic=best.quadratic,
        linear=best.linear, usage=best.usage, feasible=best.feasible,
        strategy_values=values, method_values=by_method, upper_bound=ub,
        upper_bound_scaled=ubs, trial_stats=trial_stats, case_label=labels,
        diagnostics=diags, lambdas=lambdas, beta=beta, trials=k,
        in_log_regime=ins.in_log_regime(inst), converged=bool(converged), timings=clock,
    )


def upper_bounds(inst: PiqpInstance, s, solver: SolverConfig = SolverConfig()):
    """(bound on the original optimum, relaxation value of the scaled instance, converged).

    The first is the relaxation over the original rows plus the LP value of the
    linear knapsack; both relaxations are solved to ``solver.rel_tol``.
    """
    ok = True
    quad = 0.0
    if inst.B.any():
        rs = solve_relaxation(inst, solver)
        quad, ok = rs.value, rs.converged
    lin = 0.0
    if inst.c.any():
        prob, idx = mkp_from_instance(inst)
        lin = float(solve_lp_vertex(prob).value) if len(idx) else 0.0
    scaled = 0.0
    if s.B.any():
        rss = solve_relaxation(s, solver)
        scaled, ok = rss.value, ok and rss.converged
    return quad + lin, scaled, ok
