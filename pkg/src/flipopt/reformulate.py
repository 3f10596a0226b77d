"""Builders that turn instances into solvable models, and result mapping.

Three robust constructions are provided:

* the slack-protected worst-case model over the deterministic block only
  (the uncertain block's worst case folds into constants);
* its single-constraint knapsack specialisation with reduced capacity;
* the budgeted variant where at most gamma_cap uncertain variables are
  protected simultaneously, dualised into a linear model over all n binaries
  plus auxiliary continuous variables.

Everything is built in minimisation form internally; results are reported in
the instance's native sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .instance import (
    BlpInstance,
    RobustConfig,
    UncertaintyPartition,
    enumerate_outcomes,
    worst_case_completion,
)
from .solver import MilpResult, SolveStats, solve_knapsack_dp, solve_lp, solve_milp

PROV_RBIU_DELTA = "rbiu-delta"
PROV_RBIU_DELTA_CC = "rbiu-delta-cc"
PROV_REDUCED_KP = "reduced-knapsack"
PROV_DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class MilpModel:
    """Mixed-binary model: minimise obj @ v + obj_offset, rows @ v <= rhs."""

    obj: np.ndarray
    obj_offset: float
    rows: np.ndarray
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_binary: np.ndarray
    names: tuple[str, ...]
    provenance: str
    native_sense: str
    binary_origin: tuple[int, ...]  # original variable index per binary column
    objective_var: int | None = None  # epigraph column, when present
    status_hint: str | None = None

    @property
    def num_cols(self) -> int:
        return self.obj.shape[0]

    @property
    def num_rows(self) -> int:
        return self.rows.shape[0]

    def variable_counts(self) -> dict[str, int]:
        """Binary / free / nonnegative column tallies, epigraph column aside."""
        counts = {"binary": 0, "free": 0, "nonneg": 0, "other": 0}
        for j in range(self.num_cols):
            if j == self.objective_var:
                continue
            if self.is_binary[j]:
                counts["binary"] += 1
            elif not np.isfinite(self.lb[j]) and not np.isfinite(self.ub[j]):
                counts["free"] += 1
            elif self.lb[j] == 0 and not np.isfinite(self.ub[j]):
                counts["nonneg"] += 1
            else:
                counts["other"] += 1
        return counts

    def to_lp_text(self) -> str:
        """Plain-text dump for debugging; variable names are 1-based."""
        def term(coef, name, first):
            sign = "-" if coef < 0 else ("" if first else "+")
            mag = abs(coef)
            lead = "" if first and sign == "" else f"{sign} "
            return f"{lead}{mag:g} {name}"

        lines = []
        parts = [
            term(c, self.names[j], i == 0)
            for i, (j, c) in enumerate(
                (j, self.obj[j]) for j in range(self.num_cols) if self.obj[j] != 0
            )
        ]
        expr = " ".join(parts) if parts else "0"
        if self.obj_offset:
            expr += f" + {self.obj_offset:g}"
        lines.append(f"min: {expr}")
        for r in range(self.num_rows):
            parts = []
            for j in range(self.num_cols):
                if self.rows[r, j] != 0:
                    parts.append(term(self.rows[r, j], self.names[j], not parts))
            body = " ".join(parts) if parts else "0"
            lines.append(f"r{r + 1}: {body} <= {self.rhs[r]:g}")
        for j in range(self.num_cols):
            if self.is_binary[j]:
                lines.append(f"{self.names[j]} binary")
            elif not np.isfinite(self.lb[j]) and not np.isfinite(self.ub[j]):
                lines.append(f"{self.names[j]} free")
            else:
                lo = "-inf" if not np.isfinite(self.lb[j]) else f"{self.lb[j]:g}"
                hi = "inf" if not np.isfinite(self.ub[j]) else f"{self.ub[j]:g}"
                lines.append(f"{lo} <= {self.names[j]} <= {hi}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RobustSolution:
    """One representative of the robust-optimal set plus its guarantee level.

    gamma is the worst-case objective over the outcome set of x_star, stated
    in the instance's native sense (lowest guaranteed profit for max
    instances, highest cost for min instances).
    """

    x_star: np.ndarray | None
    gamma: float | None
    provenance: str
    status: str  # optimal | infeasible | unbounded
    stats: SolveStats | None = None


def _require_uncertain(part: UncertaintyPartition) -> None:
    if part.num_uncertain < 1:
        raise ValueError("robust models need at least one uncertain variable")


def build_deterministic(inst: BlpInstance, rhs_slack=None, provenance: str = PROV_DETERMINISTIC) -> MilpModel:
    """The plain binary program itself, minimisation form, optionally with
    relaxed right-hand sides."""
    n, m = inst.n, inst.m
    rhs = inst.b.copy()
    if rhs_slack is not None:
        rhs = rhs + np.asarray(rhs_slack, dtype=float)
    return MilpModel(
        obj=inst.min_form_objective(),
        obj_offset=0.0,
        rows=inst.a.copy(),
        rhs=rhs,
        lb=np.zeros(n),
        ub=np.ones(n),
        is_binary=np.ones(n, dtype=bool),
        names=tuple(f"x{i + 1}" for i in range(n)),
        provenance=provenance,
        native_sense=inst.sense,
        binary_origin=tuple(range(n)),
    )


def build_rbiu_delta(inst: BlpInstance, part: UncertaintyPartition, cfg: RobustConfig) -> MilpModel:
    """Worst-case model over the deterministic block only.

    The uncertain block contributes the constant max(c_i, 0) to the objective
    and max(a_ij, 0) to each row, folded into the offset and right-hand
    sides.  The search space shrinks from 2**n to 2**|C|.
    """
    _require_uncertain(part)
    if cfg.delta.shape != (inst.m,):
        raise ValueError(f"delta must have one entry per row ({inst.m})")
    c_min = inst.min_form_objective()
    cset = list(part.deterministic)
    uset = list(part.uncertain)
    k_obj = float(np.maximum(c_min[uset], 0.0).sum())
    k_rows = np.maximum(inst.a[:, uset], 0.0).sum(axis=1)
    nc = len(cset)
    return MilpModel(
        obj=c_min[cset],
        obj_offset=k_obj,
        rows=inst.a[:, cset].copy(),
        rhs=inst.b + cfg.delta - k_rows,
        lb=np.zeros(nc),
        ub=np.ones(nc),
        is_binary=np.ones(nc, dtype=bool),
        names=tuple(f"x{i + 1}" for i in cset),
        provenance=PROV_RBIU_DELTA,
        native_sense=inst.sense,
        binary_origin=tuple(cset),
    )


def _check_knapsack(inst: BlpInstance) -> None:
    if inst.m != 1 or inst.sense != "max":
        raise ValueError("knapsack path needs a single-row maximisation instance")
    if np.any(inst.c < 0) or np.any(inst.a < 0):
        raise ValueError("knapsack path needs nonnegative profits and weights")


def build_reduced_knapsack(inst: BlpInstance, part: UncertaintyPartition, delta: float) -> MilpModel:
    """Knapsack over the deterministic items with capacity b + delta - sum of
    uncertain weights.  A negative reduced capacity is flagged infeasible up
    front: even the empty deterministic selection would violate the protected
    row."""
    _require_uncertain(part)
    _check_knapsack(inst)
    model = build_rbiu_delta(inst, part, RobustConfig.uniform(1, float(delta)))
    hint = "infeasible" if model.rhs[0] < 0 else None
    return MilpModel(
        obj=model.obj,
        obj_offset=model.obj_offset,
        rows=model.rows,
        rhs=model.rhs,
        lb=model.lb,
        ub=model.ub,
        is_binary=model.is_binary,
        names=model.names,
        provenance=PROV_REDUCED_KP,
        native_sense=inst.sense,
        binary_origin=model.binary_origin,
        status_hint=hint,
    )


def build_rbiu_delta_cc(inst: BlpInstance, part: UncertaintyPartition, cfg: RobustConfig) -> MilpModel:
    """Budgeted worst-case model, dualised to a linear program over all n
    binaries plus an epigraph variable and one dual block per protected
    expression (objective and each row)."""
    _require_uncertain(part)
    if cfg.delta.shape != (inst.m,):
        raise ValueError(f"delta must have one entry per row ({inst.m})")
    gamma_cap = cfg.resolved_gamma(part)
    c_min = inst.min_form_objective()
    n, m = inst.n, inst.m
    cset = list(part.deterministic)
    uset = list(part.uncertain)
    nu = len(uset)

    # column layout: x_1..x_n | gamma | per block v, u_0, u_i (objective block
    # first, then one block per row)
    names = [f"x{i + 1}" for i in range(n)] + ["gamma"]
    col_gamma = n
    block_cols = []  # (v_col, u0_col, [u_i cols]) per block
    next_col = n + 1
    for blk in range(m + 1):
        v_col = next_col
        u0_col = next_col + 1
        ui_cols = list(range(next_col + 2, next_col + 2 + nu))
        block_cols.append((v_col, u0_col, ui_cols))
        names.append(f"v{blk}")
        names.append(f"u0_{blk}")
        names.extend(f"u{i + 1}_{blk}" for i in uset)
        next_col += 2 + nu
    ncols = next_col

    lb = np.zeros(ncols)
    ub = np.full(ncols, np.inf)
    ub[:n] = 1.0
    lb[col_gamma] = -np.inf  # epigraph value can be negative in min form
    for v_col, u0_col, _ in block_cols:
        lb[u0_col] = -np.inf  # recourse term has free sign

    rows = []
    rhs = []

    def protection_block(blk: int, w: np.ndarray, bound_row_rhs: float, gamma_col: int | None):
        """Rows tying block blk's duals to coefficients w; the aggregate row is
        <= gamma for the objective block, <= rhs for constraint rows."""
        v_col, u0_col, ui_cols = block_cols[blk]
        row = np.zeros(ncols)
        row[cset] = w[cset]
        row[v_col] = gamma_cap
        row[u0_col] = 1.0
        row[ui_cols] = 1.0
        if gamma_col is not None:
            row[gamma_col] = -1.0
        rows.append(row)
        rhs.append(bound_row_rhs)
        for pos, i in enumerate(uset):
            row = np.zeros(ncols)
            row[i] = -w[i]
            row[v_col] = -1.0
            row[ui_cols[pos]] = -1.0
            rows.append(row)
            rhs.append(-max(w[i], 0.0))
        row = np.zeros(ncols)
        row[uset] = w[uset]
        row[u0_col] = -1.0
        rows.append(row)
        rhs.append(0.0)

    protection_block(0, c_min, 0.0, col_gamma)
    for j in range(m):
        protection_block(j + 1, inst.a[j], float(inst.b[j] + cfg.delta[j]), None)

    obj = np.zeros(ncols)
    obj[col_gamma] = 1.0
    is_binary = np.zeros(ncols, dtype=bool)
    is_binary[:n] = True
    return MilpModel(
        obj=obj,
        obj_offset=0.0,
        rows=np.array(rows),
        rhs=np.array(rhs),
        lb=lb,
        ub=ub,
        is_binary=is_binary,
        names=tuple(names),
        provenance=PROV_RBIU_DELTA_CC,
        native_sense=inst.sense,
        binary_origin=tuple(range(n)),
        objective_var=col_gamma,
    )


def build_rkp_delta_cc(
    inst: BlpInstance, part: UncertaintyPartition, delta: float, gamma_cap: int | None
) -> MilpModel:
    """Knapsack specialisation of the budgeted model (profits negated on entry)."""
    _check_knapsack(inst)
    return build_rbiu_delta_cc(inst, part, RobustConfig.uniform(1, float(delta), gamma_cap))


def protection_value_lp(
    inst: BlpInstance, part: UncertaintyPartition, x, gamma_cap: int, row: int | None = None
) -> float:
    """Budgeted worst case of one expression at a fixed x, via the dual LP.

    Minimises gamma_cap * v + u0 + sum u_i over the dual-feasibility rows of
    the corresponding protection block.  Agrees with the subset-enumeration
    oracle by strong duality; used to validate the dualisation.
    """
    w = inst.c if row is None else inst.a[row]
    xv = np.asarray(x, dtype=int)
    uset = list(part.uncertain)
    nu = len(uset)
    det = float(sum(w[i] * xv[i] for i in part.deterministic))
    recourse = float(sum(w[i] * xv[i] for i in uset))
    # columns: v | u_1..u_nu  (u0 is fixed at its lower bound `recourse`)
    obj = np.ones(nu + 1)
    obj[0] = gamma_cap
    rows = np.zeros((nu, nu + 1))
    rhs = np.zeros(nu)
    for pos, i in enumerate(uset):
        rows[pos, 0] = -1.0
        rows[pos, pos + 1] = -1.0
        rhs[pos] = -(max(w[i], 0.0) - w[i] * xv[i])
    lo = np.zeros(nu + 1)
    hi = np.full(nu + 1, np.inf)
    sol = solve_lp(obj, rows, rhs, lo, hi)
    if sol.status != "optimal":
        raise RuntimeError(f"protection LP ended {sol.status}")
    return det + recourse + sol.objective


def extract_solution(
    model: MilpModel, result: MilpResult, inst: BlpInstance, part: UncertaintyPartition
) -> RobustSolution:
    """Map a solver result back to a full-length solution and a native-sense
    guarantee value."""
    if result.status == "node_budget":
        raise RuntimeError("node budget exhausted before proving optimality")
    if result.status != "optimal":
        return RobustSolution(None, None, model.provenance, result.status, result.stats)
    x = np.zeros(inst.n, dtype=int)
    bin_cols = np.flatnonzero(model.is_binary)
    for col, orig in zip(bin_cols, model.binary_origin):
        x[orig] = int(round(result.values[col]))
    if model.provenance in (PROV_RBIU_DELTA, PROV_REDUCED_KP):
        x = worst_case_completion(inst, part, x)
    gamma_min = result.objective
    gamma = -gamma_min if model.native_sense == "max" else gamma_min
    return RobustSolution(x, float(gamma), model.provenance, "optimal", result.stats)


def expand_robust_set(
    sol: RobustSolution, part: UncertaintyPartition
) -> Iterator[np.ndarray]:
    """All outcomes of the returned representative.

    For the slack-only model every member is itself optimal; for the budgeted
    model the members share the deterministic block but carry no optimality
    certificate unless gamma_cap = |U|.
    """
    if sol.status != "optimal":
        raise ValueError(f"cannot expand a solution with status {sol.status!r}")
    return enumerate_outcomes(sol.x_star, part)


def _integral_knapsack(inst: BlpInstance) -> bool:
    """Integer profits and weights; a fractional capacity floors exactly."""
    return (
        inst.m == 1
        and inst.sense == "max"
        and bool(np.all(inst.c >= 0) and np.all(inst.a >= 0))
        and bool(np.all(inst.c == np.round(inst.c)) and np.all(inst.a == np.round(inst.a)))
    )


def solve_deterministic(inst: BlpInstance) -> tuple[float, np.ndarray]:
    """Optimum of the plain problem in native sense; DP fast path for integer
    knapsacks, branch-and-bound otherwise."""
    if _integral_knapsack(inst) and inst.b[0] >= 0:
        value, chosen = solve_knapsack_dp(inst.c, inst.a[0], math.floor(inst.b[0]))
        x = np.zeros(inst.n, dtype=int)
        x[chosen] = 1
        return float(value), x
    model = build_deterministic(inst)
    result = solve_milp(model)
    if result.status != "optimal":
        raise RuntimeError(f"deterministic solve ended {result.status}")
    x = np.round(result.values[: inst.n]).astype(int)
    obj = result.objective
    return (-obj if inst.sense == "max" else obj), x


def solve_rbiu_delta(
    inst: BlpInstance, part: UncertaintyPartition, cfg: RobustConfig, *, log=None
) -> RobustSolution:
    model = build_rbiu_delta(inst, part, cfg)
    return extract_solution(model, solve_milp(model, log=log), inst, part)


def solve_reduced_knapsack(inst: BlpInstance, part: UncertaintyPartition, delta: float) -> RobustSolution:
    """Reduced-capacity knapsack solve; DP when the data is integral."""
    model = build_reduced_knapsack(inst, part, delta)
    if model.status_hint == "infeasible":
        return RobustSolution(None, None, model.provenance, "infeasible")
    cset = list(part.deterministic)
    if _integral_knapsack(inst):
        # integer weights make the floor of the fractional capacity exact
        value, chosen = solve_knapsack_dp(
            inst.c[cset], inst.a[0, cset], math.floor(model.rhs[0])
        )
        x = np.zeros(inst.n, dtype=int)
        x[[cset[i] for i in chosen]] = 1
        x = worst_case_completion(inst, part, x)
        return RobustSolution(x, float(value), model.provenance, "optimal")
    return extract_solution(model, solve_milp(model), inst, part)


def solve_rbiu_delta_cc(
    inst: BlpInstance,
    part: UncertaintyPartition,
    cfg: RobustConfig,
    *,
    incumbent=None,
    seed_incumbent: bool = True,
    log=None,
) -> RobustSolution:
    """Solve the budgeted model.

    Any solution of the slack-only model stays feasible under a smaller
    protection budget, so its optimum seeds the search unless the caller
    supplies an incumbent (or disables seeding).
    """
    model = build_rbiu_delta_cc(inst, part, cfg)
    if incumbent is None and seed_incumbent:
        base = solve_rbiu_delta(inst, part, RobustConfig(cfg.delta, None))
        if base.status == "optimal":
            incumbent = base.x_star
    result = solve_milp(model, incumbent=incumbent, log=log)
    return extract_solution(model, result, inst, part)
