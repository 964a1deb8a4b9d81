"""Approximation algorithms for positive 0-1 quadratic programs (graph knapsack)."""

from .greedy import GreedyConfig, greedy_bound, greedy_budget_certificate, greedy_solve, marginal_ratio
from .instance import (BinarySolution, GraphView, InstanceError, PiqpInstance, ScaledInstance, evaluate,
                       generate, prune_infeasible_pairs, read_instance, scale, split_piqps_piqpr, validate,
                       write_instance)
from .mkp import MkpProblem, VertexLpSolution, round_p_plus_1, solve_lp_vertex
from .oracle import OracleResult, brute_force, brute_force_mkp
from .relaxation import RelaxationSolution, SolverConfig, check_sqrt_budget_bound, solve_relaxation
from .rounding import (RoundingConfig, SolveConfig, SolveReport, TrialStats, best_edge_solution, compute_lambda,
                       concentration_diagnostics, local_knapsack_solution, repair_infeasible, round_once,
                       solve_auto)

__version__ = "0.1.0"
