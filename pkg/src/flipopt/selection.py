"""Picking one prescribed solution out of a robust-optimal set.

Every selector returns a member of the outcome set of the robust solve: the
deterministic block is pinned to the solved values and only the uncertain
block is chosen.  Available selectors: the best completion under the
original right-hand sides, the best completion under the slack-relaxed ones,
and closed-form highest/lowest-objective members.  Applied to the slack-only
and budgeted robust sets these realise the eight selection problems of the
experiment study.
"""

from __future__ import annotations

import numpy as np

from .instance import BlpInstance, RobustConfig, UncertaintyPartition
from .reformulate import MilpModel, RobustSolution, build_deterministic
from .solver import solve_milp


def _solve_completion(
    inst: BlpInstance,
    part: UncertaintyPartition,
    robust: RobustSolution,
    rhs_slack,
    provenance: str,
) -> np.ndarray | None:
    if robust.status != "optimal":
        raise ValueError("selection needs an optimal robust solution")
    base = build_deterministic(inst, rhs_slack=rhs_slack, provenance=provenance)
    lb = base.lb.copy()
    ub = base.ub.copy()
    for i in part.deterministic:  # pin the deterministic block, keep U free
        lb[i] = ub[i] = float(robust.x_star[i])
    model = MilpModel(
        obj=base.obj,
        obj_offset=base.obj_offset,
        rows=base.rows,
        rhs=base.rhs,
        lb=lb,
        ub=ub,
        is_binary=base.is_binary,
        names=base.names,
        provenance=provenance,
        native_sense=base.native_sense,
        binary_origin=base.binary_origin,
    )
    result = solve_milp(model)
    if result.status != "optimal":
        return None
    return np.round(result.values[: inst.n]).astype(int)


def select_deterministic(
    inst: BlpInstance, part: UncertaintyPartition, robust: RobustSolution
) -> np.ndarray | None:
    """Best completion feasible at the original right-hand sides, or None
    when no completion is."""
    return _solve_completion(inst, part, robust, None, "selection-sp1")


def select_relaxed(
    inst: BlpInstance,
    part: UncertaintyPartition,
    robust: RobustSolution,
    cfg: RobustConfig,
) -> np.ndarray | None:
    """Best completion within the slack-relaxed right-hand sides."""
    return _solve_completion(inst, part, robust, cfg.delta, "selection-sp2")


def select_upper_bound(
    robust: RobustSolution, inst: BlpInstance, part: UncertaintyPartition
) -> np.ndarray:
    """Member with the highest objective value, in linear time.

    An uncertain coordinate is on exactly when its coefficient is
    nonnegative (zero counts as on), which maximises c.x over the set for
    either optimisation sense.
    """
    if robust.status != "optimal":
        raise ValueError("selection needs an optimal robust solution")
    x = np.asarray(robust.x_star, dtype=int).copy()
    for i in part.uncertain:
        x[i] = 1 if inst.c[i] >= 0 else 0
    return x


def select_lower_bound(
    robust: RobustSolution, inst: BlpInstance, part: UncertaintyPartition
) -> np.ndarray:
    """Member with the lowest objective value; mirror of select_upper_bound."""
    if robust.status != "optimal":
        raise ValueError("selection needs an optimal robust solution")
    x = np.asarray(robust.x_star, dtype=int).copy()
    for i in part.uncertain:
        x[i] = 0 if inst.c[i] >= 0 else 1
    return x
