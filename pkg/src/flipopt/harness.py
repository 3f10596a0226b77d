"""Experiment driver: instance generation, sweep studies, results files.

Instances follow the benchmark protocol: integer profits and weights drawn
uniformly from fixed ranges, capacity at half the total weight, and the
uncertain variables taken from the front of the index range.  Each study
iterates a grid over uncertainty level, slack fraction, and protection
fraction, evaluates solutions by simulation, and emits one row per
(replication, grid point, solution kind).

Every row is a pure function of (plan, seed): reruns produce byte-identical
results files.  Replications can be dispatched to a process pool via the
FLIPOPT_WORKERS environment variable; output order does not depend on the
worker count.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .instance import BlpInstance, RobustConfig, UncertaintyPartition
from .probability import FlipModel, empirical_violation_rate, infeasibility_upper_bound
from .reformulate import (
    solve_deterministic,
    solve_rbiu_delta_cc,
    solve_reduced_knapsack,
)
from .selection import (
    select_deterministic,
    select_lower_bound,
    select_relaxed,
    select_upper_bound,
)
from .simulate import simulate

SCHEMA_LINE = "# flipopt-results v1"

STUDIES = ("delta", "cc", "selection", "bound")

_DEFAULT_GRIDS = {
    "delta": {
        "u_grid": (0.01, 0.03, 0.05, 0.07, 0.09),
        "delta_grid": (0.00, 0.01, 0.02, 0.03, 0.04, 0.05),
        "p_grid": (1.0,),
    },
    "cc": {
        "u_grid": (0.09,),
        "delta_grid": (0.00, 0.01, 0.02, 0.03, 0.04, 0.05),
        "p_grid": (0.4, 0.6, 0.8, 1.0),
    },
    "selection": {
        "u_grid": (0.25,),
        "delta_grid": (0.10,),
        "p_grid": (0.8,),
    },
    "bound": {
        "u_grid": (0.05, 0.15, 0.25, 0.35, 0.45),
        "delta_grid": (0.0,),
        "p_grid": (0.4, 0.6, 0.8),
    },
}


@dataclass(frozen=True)
class ExperimentPlan:
    study: str
    replications: int = 3
    n: int = 100
    cost_range: tuple[int, int] = (21, 80)
    weight_range: tuple[int, int] = (41, 60)
    capacity_rule: float = 0.5
    u_grid: tuple[float, ...] = ()
    delta_grid: tuple[float, ...] = ()
    p_grid: tuple[float, ...] = ()
    seed: int = 20240
    flip_p: float = 0.5  # assumed stay-put odds for the bound study
    flip_q: float = 0.5
    bound_trials: int = 4096

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"study must be one of {STUDIES}")
        if self.replications < 1 or self.n < 1:
            raise ValueError("replications and n must be positive")
        for name in ("u_grid", "delta_grid", "p_grid"):
            grid = getattr(self, name)
            if not grid:
                raise ValueError(f"{name} must be nonempty")
            if name == "delta_grid":
                if any(v < 0 for v in grid):
                    raise ValueError("delta fractions must be nonnegative")
            elif any(not 0 <= v <= 1 for v in grid):
                raise ValueError(f"{name} values must lie in [0, 1]")


def default_plan(study: str, **overrides) -> ExperimentPlan:
    """Plan pre-filled with the benchmark grids for the given study."""
    if study not in _DEFAULT_GRIDS:
        raise ValueError(f"study must be one of {STUDIES}")
    params = dict(_DEFAULT_GRIDS[study])
    params.update(overrides)
    return ExperimentPlan(study=study, **params)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def generate_instance(
    plan: ExperimentPlan, replication_index: int, u: float | None = None
) -> tuple[BlpInstance, UncertaintyPartition]:
    """Replication's knapsack instance plus the partition for level u
    (defaults to the plan's first grid entry)."""
    rng = np.random.default_rng([plan.seed, replication_index])
    c = rng.integers(plan.cost_range[0], plan.cost_range[1] + 1, size=plan.n)
    a = rng.integers(plan.weight_range[0], plan.weight_range[1] + 1, size=plan.n)
    b = plan.capacity_rule * float(a.sum())
    inst = BlpInstance(c=c.astype(float), a=a.reshape(1, -1).astype(float), b=[b], sense="max")
    if u is None:
        u = plan.u_grid[0]
    return inst, partition_for(plan, u)


def partition_for(plan: ExperimentPlan, u: float) -> UncertaintyPartition:
    """Front-of-range uncertain block of size round(u * n), at least 1."""
    size = max(1, _round_half_up(u * plan.n))
    return UncertaintyPartition.from_uncertain(plan.n, range(size))


def clamp_gamma(p: float, num_uncertain: int) -> int:
    return min(max(_round_half_up(p * num_uncertain), 1), num_uncertain)


@dataclass
class ResultsTable:
    columns: list[str]
    rows: list[dict] = field(default_factory=list)

    def append(self, **kwargs):
        unknown = set(kwargs) - set(self.columns)
        if unknown:
            raise KeyError(f"row has columns outside the schema: {sorted(unknown)}")
        self.rows.append({col: kwargs.get(col) for col in self.columns})


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(table: ResultsTable, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(SCHEMA_LINE + "\n")
            writer = csv.writer(fh)
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([_fmt(row.get(col)) for col in table.columns])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_results(path) -> ResultsTable:
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read results from {path}: {exc}") from exc
    if not lines or lines[0] != SCHEMA_LINE:
        raise ValueError(f"{path}:1: missing schema line {SCHEMA_LINE!r}")
    if len(lines) < 2:
        raise ValueError(f"{path}:2: missing header row")
    reader = csv.reader(lines[1:])
    columns = next(reader)
    table = ResultsTable(columns=columns)
    for offset, cells in enumerate(reader, start=3):
        if len(cells) != len(columns):
            raise ValueError(
                f"{path}:{offset}: expected {len(columns)} cells, found {len(cells)}"
            )
        table.rows.append({col: _parse_cell(cell) for col, cell in zip(columns, cells)})
    return table


_COLUMNS = {
    "delta": [
        "study", "replication", "u", "delta", "kind", "status", "gamma",
        "mean_ratio", "feasibility", "single_ratio", "violation", "mode", "trials",
    ],
    "cc": [
        "study", "replication", "u", "delta", "p", "gamma_cap", "kind", "status",
        "gamma", "mean_ratio", "feasibility", "single_ratio", "violation", "mode", "trials",
    ],
    "selection": [
        "study", "replication", "u", "delta", "p", "gamma_cap", "model", "selector",
        "status", "gamma", "prescribed_objective", "prescribed_ratio",
        "prescribed_violation", "mean_ratio", "feasibility", "mode", "trials",
    ],
    "bound": [
        "study", "replication", "u", "p", "gamma_cap", "u0", "u1", "flip_p",
        "flip_q", "theoretical", "empirical", "difference", "trials",
    ],
}


def _sim_fields(report) -> dict:
    return {
        "mean_ratio": report.mean_objective_ratio,
        "feasibility": report.feasibility_level,
        "mode": report.mode,
        "trials": report.trials,
    }


def _delta_rows(plan: ExperimentPlan, rep: int) -> list[dict]:
    table = ResultsTable(_COLUMNS["delta"])
    inst, _ = generate_instance(plan, rep)
    reference, x_det = solve_deterministic(inst)
    for iu, u in enumerate(plan.u_grid):
        part = partition_for(plan, u)
        det = simulate(inst, x_det, part.uncertain, reference, seed=(plan.seed, 7, rep, iu))
        table.append(
            study="delta", replication=rep, u=u, kind="deterministic", status="optimal",
            gamma=None, single_ratio=det.single_ratio, violation=det.violation,
            delta=None, **_sim_fields(det),
        )
        for idel, dfrac in enumerate(plan.delta_grid):
            sol = solve_reduced_knapsack(inst, part, dfrac * float(inst.b[0]))
            if sol.status != "optimal":
                table.append(
                    study="delta", replication=rep, u=u, delta=dfrac, kind="robust",
                    status=sol.status, gamma=None, mean_ratio=None, feasibility=None,
                    single_ratio=None, violation=None, mode=None, trials=None,
                )
                continue
            rep_sim = simulate(
                inst, sol.x_star, part.uncertain, reference, seed=(plan.seed, 8, rep, iu, idel)
            )
            table.append(
                study="delta", replication=rep, u=u, delta=dfrac, kind="robust",
                status="optimal", gamma=sol.gamma, single_ratio=rep_sim.single_ratio,
                violation=rep_sim.violation, **_sim_fields(rep_sim),
            )
    return table.rows


def _cc_rows(plan: ExperimentPlan, rep: int) -> list[dict]:
    table = ResultsTable(_COLUMNS["cc"])
    inst, _ = generate_instance(plan, rep)
    reference, x_det = solve_deterministic(inst)
    for iu, u in enumerate(plan.u_grid):
        part = partition_for(plan, u)
        det = simulate(inst, x_det, part.uncertain, reference, seed=(plan.seed, 7, rep, iu))
        table.append(
            study="cc", replication=rep, u=u, kind="deterministic", status="optimal",
            delta=None, p=None, gamma_cap=None, gamma=None,
            single_ratio=det.single_ratio, violation=det.violation, **_sim_fields(det),
        )
        for ip, p in enumerate(plan.p_grid):
            gamma_cap = clamp_gamma(p, part.num_uncertain)
            for idel, dfrac in enumerate(plan.delta_grid):
                delta_abs = dfrac * float(inst.b[0])
                base = solve_reduced_knapsack(inst, part, delta_abs)
                incumbent = base.x_star if base.status == "optimal" else None
                cfg = RobustConfig.uniform(1, delta_abs, gamma_cap)
                sol = solve_rbiu_delta_cc(inst, part, cfg, incumbent=incumbent)
                if sol.status != "optimal":
                    table.append(
                        study="cc", replication=rep, u=u, delta=dfrac, p=p,
                        gamma_cap=gamma_cap, kind="robust", status=sol.status,
                        gamma=None, mean_ratio=None, feasibility=None,
                        single_ratio=None, violation=None, mode=None, trials=None,
                    )
                    continue
                rep_sim = simulate(
                    inst, sol.x_star, part.uncertain, reference,
                    seed=(plan.seed, 8, rep, iu, ip, idel),
                )
                table.append(
                    study="cc", replication=rep, u=u, delta=dfrac, p=p,
                    gamma_cap=gamma_cap, kind="robust", status="optimal",
                    gamma=sol.gamma, single_ratio=rep_sim.single_ratio,
                    violation=rep_sim.violation, **_sim_fields(rep_sim),
                )
    return table.rows


def _selection_rows(plan: ExperimentPlan, rep: int) -> list[dict]:
    table = ResultsTable(_COLUMNS["selection"])
    inst, _ = generate_instance(plan, rep)
    reference, x_det = solve_deterministic(inst)
    u = plan.u_grid[0]
    dfrac = plan.delta_grid[0]
    p = plan.p_grid[0]
    part = partition_for(plan, u)
    delta_abs = dfrac * float(inst.b[0])
    gamma_cap = clamp_gamma(p, part.num_uncertain)

    det = simulate(inst, x_det, part.uncertain, reference, seed=(plan.seed, 7, rep))
    table.append(
        study="selection", replication=rep, u=u, delta=dfrac, p=p, gamma_cap=gamma_cap,
        model="deterministic", selector=None, status="optimal", gamma=None,
        prescribed_objective=reference, prescribed_ratio=det.single_ratio,
        prescribed_violation=det.violation, **_sim_fields(det),
    )

    base = solve_reduced_knapsack(inst, part, delta_abs)
    cfg = RobustConfig.uniform(1, delta_abs, gamma_cap)
    cc = solve_rbiu_delta_cc(
        inst, part, cfg, incumbent=base.x_star if base.status == "optimal" else None
    )
    for model_name, sol, sim_tag in (("delta", base, 10), ("cc", cc, 11)):
        if sol.status != "optimal":
            table.append(
                study="selection", replication=rep, u=u, delta=dfrac, p=p,
                gamma_cap=gamma_cap, model=model_name, selector=None,
                status=sol.status, gamma=None, prescribed_objective=None,
                prescribed_ratio=None, prescribed_violation=None, mean_ratio=None,
                feasibility=None, mode=None, trials=None,
            )
            continue
        # implemented performance is a property of the whole outcome set and
        # therefore shared by every selection from it
        set_sim = simulate(
            inst, sol.x_star, part.uncertain, reference, seed=(plan.seed, sim_tag, rep)
        )
        selections = {
            "sp1": select_deterministic(inst, part, sol),
            "sp2": select_relaxed(inst, part, sol, cfg),
            "sp3": select_upper_bound(sol, inst, part),
            "sp4": select_lower_bound(sol, inst, part),
        }
        for name, chosen in selections.items():
            if chosen is None:
                table.append(
                    study="selection", replication=rep, u=u, delta=dfrac, p=p,
                    gamma_cap=gamma_cap, model=model_name, selector=name,
                    status="not-found", gamma=sol.gamma, prescribed_objective=None,
                    prescribed_ratio=None, prescribed_violation=None,
                    mean_ratio=None, feasibility=None, mode=None, trials=None,
                )
                continue
            obj = float(inst.c @ chosen)
            table.append(
                study="selection", replication=rep, u=u, delta=dfrac, p=p,
                gamma_cap=gamma_cap, model=model_name, selector=name, status="optimal",
                gamma=sol.gamma, prescribed_objective=obj,
                prescribed_ratio=1.0 - obj / reference,
                prescribed_violation=float(
                    max(((inst.a @ chosen - inst.b) / inst.b).max(), 0.0)
                ),
                **_sim_fields(set_sim),
            )
    return table.rows


def _bound_rows(plan: ExperimentPlan, rep: int) -> list[dict]:
    table = ResultsTable(_COLUMNS["bound"])
    inst, _ = generate_instance(plan, rep)
    for iu, u in enumerate(plan.u_grid):
        part = partition_for(plan, u)
        for ip, p in enumerate(plan.p_grid):
            gamma_cap = clamp_gamma(p, part.num_uncertain)
            cfg = RobustConfig.uniform(1, plan.delta_grid[0] * float(inst.b[0]), gamma_cap)
            base = solve_reduced_knapsack(inst, part, float(cfg.delta[0]))
            sol = solve_rbiu_delta_cc(
                inst, part, cfg, incumbent=base.x_star if base.status == "optimal" else None
            )
            if sol.status != "optimal":
                continue
            fm = FlipModel.from_solution(sol.x_star, part, plan.flip_p, plan.flip_q)
            theoretical = infeasibility_upper_bound(fm, gamma_cap)
            empirical = empirical_violation_rate(
                sol, inst, part, cfg, fm, plan.bound_trials,
                seed=(plan.seed, 9, rep, iu, ip),
            )
            table.append(
                study="bound", replication=rep, u=u, p=p, gamma_cap=gamma_cap,
                u0=fm.u0, u1=fm.u1, flip_p=plan.flip_p, flip_q=plan.flip_q,
                theoretical=theoretical, empirical=empirical,
                difference=theoretical - empirical, trials=plan.bound_trials,
            )
    return table.rows


_STUDY_FN = {
    "delta": _delta_rows,
    "cc": _cc_rows,
    "selection": _selection_rows,
    "bound": _bound_rows,
}


def _rows_for_rep(args):
    plan, rep = args
    return _STUDY_FN[plan.study](plan, rep)


def run_study(plan: ExperimentPlan) -> ResultsTable:
    """Run the plan's study over every replication; honours FLIPOPT_WORKERS."""
    workers = int(os.environ.get("FLIPOPT_WORKERS", "1"))
    tasks = [(plan, rep) for rep in range(plan.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_rows_for_rep, tasks))
    else:
        chunks = [_rows_for_rep(t) for t in tasks]
    table = ResultsTable(_COLUMNS[plan.study])
    for chunk in chunks:
        table.rows.extend(chunk)
    return table


def run_delta_sweep(plan: ExperimentPlan) -> ResultsTable:
    if plan.study != "delta":
        raise ValueError("plan.study must be 'delta'")
    return run_study(plan)


def run_delta_cc_sweep(plan: ExperimentPlan) -> ResultsTable:
    if plan.study != "cc":
        raise ValueError("plan.study must be 'cc'")
    return run_study(plan)


def run_selection_study(plan: ExperimentPlan) -> ResultsTable:
    if plan.study != "selection":
        raise ValueError("plan.study must be 'selection'")
    return run_study(plan)


def run_bound_study(plan: ExperimentPlan) -> ResultsTable:
    if plan.study != "bound":
        raise ValueError("plan.study must be 'bound'")
    return run_study(plan)
