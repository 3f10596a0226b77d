"""Robust binary linear programs under implementation-time value flips."""

from .instance import (
    BlpInstance,
    RobustConfig,
    UncertaintyPartition,
    enumerate_outcomes,
    evaluate_constraints,
    evaluate_objective,
    is_deterministic_feasible,
    load_instance,
    outcome_set_size,
    save_instance,
)
from .linearize import (
    brute_force_cc_protection,
    brute_force_worst_case,
    worst_case_constraint_linear,
    worst_case_objective_linear,
)
from .probability import FlipModel, empirical_violation_rate, infeasibility_upper_bound, pmf_exact_flips
from .reformulate import (
    MilpModel,
    RobustSolution,
    build_rbiu_delta,
    build_rbiu_delta_cc,
    build_reduced_knapsack,
    build_rkp_delta_cc,
    expand_robust_set,
    solve_deterministic,
    solve_rbiu_delta,
    solve_rbiu_delta_cc,
    solve_reduced_knapsack,
)
from .selection import (
    select_deterministic,
    select_lower_bound,
    select_relaxed,
    select_upper_bound,
)
from .simulate import SimReport, objective_ratio, simulate, violation_level
from .solver import LpSolution, MilpResult, SolveStats, solve_knapsack_dp, solve_lp, solve_milp

__version__ = "0.1.0"
