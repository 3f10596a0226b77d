"""Exact desk-scale optimisation: LP, branch-and-bound MILP, knapsack DP.

The LP engine is a dense-tableau primal simplex over bounded variables
(including free variables via infinite bounds) with a two-phase start and a
Bland-rule fallback engaged when the objective stalls.  No factorisation
updates, warm starts, or cuts: problem sizes here are in the hundreds of rows
and columns, and reproducibility matters more than speed.

Branch-and-bound branches on the most-fractional binary (ties to the lowest
index) and selects nodes best-bound-first with a depth-first tiebreak, so two
runs on the same model explore the same tree.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

FEAS_TOL = 1e-7
COST_TOL = 1e-9
INT_TOL = 1e-6
PIVOT_TOL = 1e-9

DP_CELL_BUDGET = 50_000_000


@dataclass(frozen=True)
class LpSolution:
    values: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded
    iterations: int = 0


@dataclass
class SolveStats:
    nodes_explored: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    gap: float = 0.0


@dataclass(frozen=True)
class MilpResult:
    values: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded | node_budget
    stats: SolveStats = field(default_factory=SolveStats)


class _Unbounded(Exception):
    pass


class _Singular(Exception):
    pass


_REFRESH_EVERY = 128  # pivots between recomputations of the tableau


class _Tableau:
    """Dense-tableau simplex state over `A x = rhs` with per-column bounds.

    The tableau B^-1 A is kept up to date by pivot row operations and
    recomputed from the basis every _REFRESH_EVERY pivots to contain float
    drift; there are no factorisation updates.
    """

    def __init__(self, a, rhs, lo, hi, basis, pos, val):
        self.a = a
        self.rhs = rhs
        self.lo = lo
        self.hi = hi
        self.basis = basis  # one column index per row
        self.pos = pos  # nonbasic position: 0 at lower, 1 at upper, 2 free
        self.val = val
        self.iterations = 0
        self._pivots = 0
        self.tableau = None
        self.refresh()

    def refresh(self):
        b_mat = self.a[:, self.basis]
        nb = np.ones(self.a.shape[1], bool)
        nb[self.basis] = False
        try:
            self.tableau = np.linalg.solve(b_mat, self.a)
            self.val[self.basis] = np.linalg.solve(
                b_mat, self.rhs - self.a[:, nb] @ self.val[nb]
            )
        except np.linalg.LinAlgError as exc:
            raise _Singular("singular basis") from exc

    def run(self, cost, max_iter):
        """Minimise cost over the current state; returns on optimality."""
        ncols = self.a.shape[1]
        bland = False
        stall = 0
        stall_limit = 4 * ncols + 100
        last_obj = np.inf
        fixed = np.flatnonzero(self.hi - self.lo <= 0)
        free_cols = np.flatnonzero(self.pos == 2)
        # sign * reduced_cost > 0 marks an improving move for at-bound columns
        sign = np.where(self.pos == 1, 1.0, -1.0)
        self._sign = sign
        while True:
            self.iterations += 1
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration cap exceeded")
            red = cost - cost[self.basis] @ self.tableau

            score = sign * red
            if free_cols.size:
                score[free_cols] = np.abs(red[free_cols])
            score[self.basis] = 0.0
            score[fixed] = 0.0
            if bland:
                cand = score > COST_TOL
                if not cand.any():
                    self.refresh()
                    return
                enter = int(cand.argmax())
            else:
                enter = int(score.argmax())
                if score[enter] <= COST_TOL:
                    self.refresh()
                    return
            if self.pos[enter] == 0:
                sigma = 1.0
            elif self.pos[enter] == 1:
                sigma = -1.0
            else:
                sigma = -1.0 if red[enter] > 0 else 1.0

            self._step(enter, sigma, bland)

            obj = float(cost @ self.val)
            if obj < last_obj - 1e-12:
                stall = 0
            else:
                stall += 1
                if stall > stall_limit:
                    bland = True
            last_obj = obj

    def _step(self, enter, sigma, bland):
        lo, hi, val, basis = self.lo, self.hi, self.val, self.basis
        w = self.tableau[:, enter]
        rate = -sigma * w  # basic-variable change per unit step

        if sigma > 0:
            t_own = hi[enter] - val[enter]
        else:
            t_own = val[enter] - lo[enter]

        xb = val[basis]
        lo_b = lo[basis]
        hi_b = hi[basis]
        # blocking step length per basic variable; non-moving rows get +inf
        target = np.where(rate < -PIVOT_TOL, lo_b, np.where(rate > PIVOT_TOL, hi_b, np.inf))
        idx = np.flatnonzero(np.isfinite(target))
        limits = np.full(len(basis), np.inf)
        if idx.size:
            limits[idx] = np.maximum((target[idx] - xb[idx]) / rate[idx], 0.0)

        t_rows = limits.min() if len(limits) else np.inf
        t_star = min(t_own, t_rows)
        if not np.isfinite(t_star):
            raise _Unbounded

        if t_own <= t_rows:
            # entering variable hits its opposite bound: no basis change
            val[basis] = xb + t_own * rate
            val[enter] = hi[enter] if sigma > 0 else lo[enter]
            self.pos[enter] = 1 if sigma > 0 else 0
            self._sign[enter] = 1.0 if sigma > 0 else -1.0
            return

        blockers = np.flatnonzero(limits <= t_star + 1e-12)
        if bland:
            leave_row = int(blockers[np.argmin(basis[blockers])])
        else:
            strength = np.abs(w[blockers])
            best = strength.max()
            tied = blockers[strength >= best - 1e-12]
            leave_row = int(tied[np.argmin(basis[tied])])

        leaving = basis[leave_row]
        val[basis] = xb + t_star * rate
        val[enter] = val[enter] + sigma * t_star
        if rate[leave_row] < 0:
            val[leaving] = lo[leaving]
            self.pos[leaving] = 0
            self._sign[leaving] = -1.0
        else:
            val[leaving] = hi[leaving]
            self.pos[leaving] = 1
            self._sign[leaving] = 1.0
        basis[leave_row] = enter

        # pivot the tableau in place
        piv_row = self.tableau[leave_row] / self.tableau[leave_row, enter]
        col = self.tableau[:, enter].copy()
        col[leave_row] = 0.0
        self.tableau -= col[:, None] * piv_row
        self.tableau[leave_row] = piv_row
        self._pivots += 1
        if self._pivots % _REFRESH_EVERY == 0:
            self.refresh()


def _equilibrate(rows, rhs):
    """Scale each row by its max absolute coefficient; pure row scaling."""
    scale = np.abs(rows).max(axis=1, initial=0.0)
    scale[scale < 1e-12] = 1.0
    return rows / scale[:, None], rhs / scale


def _crash_basis(rows_s, lo, hi, val, basis, resid, n) -> None:
    """Repair violated rows by moving a sparse structural column off its bound
    and into the basis, before any artificials are created.

    A column is eligible for row r only while its other nonzeros avoid rows
    crashed so far, which keeps the crash submatrix triangular and the basis
    invertible.  All arrays are updated in place.
    """
    if n == 0:
        return
    nnz = np.abs(rows_s[:, :n]) > 1e-9
    col_count = nnz.sum(axis=0)
    in_basis = np.zeros(n, dtype=bool)
    overlap = np.zeros(n, dtype=bool)  # columns touching already-crashed rows
    for r in range(rows_s.shape[0]):
        if resid[r] >= -FEAS_TOL:
            continue
        alpha = rows_s[r, :n]
        with np.errstate(divide="ignore", invalid="ignore"):
            target = val[:n] + resid[r] / alpha
        ok = (
            (np.abs(alpha) > 1e-7)
            & ~in_basis
            & ~overlap
            & (target >= lo[:n] - 1e-9)
            & (target <= hi[:n] + 1e-9)
        )
        if not ok.any():
            continue
        # sparsest eligible column, lowest index on ties
        key = np.where(ok, col_count * (n + 1) + np.arange(n), np.iinfo(np.int64).max)
        j = int(key.argmin())
        resid -= rows_s[:, j] * (target[j] - val[j])
        resid[r] = 0.0
        val[j] = target[j]
        basis[r] = j
        in_basis[j] = True
        overlap |= nnz[r]


def solve_lp(obj, rows, rhs, lo, hi, offset: float = 0.0, max_iter: int = 200_000) -> LpSolution:
    """Minimise obj @ x + offset s.t. rows @ x <= rhs, lo <= x <= hi.

    Bounds may be infinite on either side.  Returns an optimal basic solution,
    or a verdict of infeasible/unbounded.
    """
    obj = np.asarray(obj, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    n = obj.shape[0]
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1) if rows.size else rows.reshape(0, n)
    if rows.shape[1] != n:
        raise ValueError(f"rows have {rows.shape[1]} columns, objective has {n}")
    k = rows.shape[0]

    if np.any(lo > hi + FEAS_TOL):
        return LpSolution(np.zeros(n), np.inf, "infeasible")
    np.minimum(lo, hi, out=lo)

    if k == 0:
        vals = np.where(obj > 0, lo, np.where(obj < 0, hi, np.where(np.isfinite(lo), lo, 0.0)))
        if not np.all(np.isfinite(vals[obj != 0])):
            return LpSolution(np.zeros(n), -np.inf, "unbounded")
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return LpSolution(vals, float(obj @ vals + offset), "optimal")

    rows_s, rhs_s = _equilibrate(rows, rhs)

    # columns: structural | row slacks | (artificials appended on demand)
    a = np.hstack([rows_s, np.eye(k)])
    full_lo = np.concatenate([lo, np.zeros(k)])
    full_hi = np.concatenate([hi, np.full(k, np.inf)])

    val = np.zeros(n + k)
    pos = np.full(n + k, 2, dtype=np.int8)
    finite_lo = np.isfinite(full_lo)
    finite_hi = np.isfinite(full_hi)
    val[finite_hi] = full_hi[finite_hi]
    pos[finite_hi] = 1
    val[finite_lo] = full_lo[finite_lo]  # prefer lower bound when both finite
    pos[finite_lo] = 0

    basis = np.arange(n, n + k)
    resid = rhs_s - rows_s @ val[:n]
    _crash_basis(rows_s, full_lo, full_hi, val, basis, resid, n)
    bad = resid < -FEAS_TOL

    if bad.any():
        n_art = int(bad.sum())
        art_cols = np.zeros((k, n_art))
        for j, r in enumerate(np.flatnonzero(bad)):
            art_cols[r, j] = -1.0
            basis[r] = n + k + j
        a = np.hstack([a, art_cols])
        full_lo = np.concatenate([full_lo, np.zeros(n_art)])
        full_hi = np.concatenate([full_hi, np.full(n_art, np.inf)])
        val = np.concatenate([val, np.zeros(n_art)])
        pos = np.concatenate([pos, np.zeros(n_art, dtype=np.int8)])

        tab = _Tableau(a, rhs_s, full_lo, full_hi, basis, pos, val)
        phase1 = np.zeros(a.shape[1])
        phase1[n + k :] = 1.0
        try:
            tab.run(phase1, max_iter)
        except _Unbounded:  # pragma: no cover - phase 1 is bounded below
            raise RuntimeError("phase-1 reported unbounded")
        except _Singular:
            return LpSolution(np.zeros(n), np.inf, "infeasible", tab.iterations)
        if float(phase1 @ tab.val) > FEAS_TOL * max(1.0, np.abs(rhs_s).sum()):
            return LpSolution(np.zeros(n), np.inf, "infeasible", tab.iterations)
        _evict_artificials(tab, n + k)
        tab.lo[n + k :] = 0.0
        tab.hi[n + k :] = 0.0
        tab.val[n + k :] = np.maximum(tab.val[n + k :], 0.0)
    else:
        tab = _Tableau(a, rhs_s, full_lo, full_hi, basis, pos, val)

    cost = np.zeros(a.shape[1])
    cost[:n] = obj
    try:
        tab.run(cost, max_iter)
    except _Unbounded:
        return LpSolution(np.zeros(n), -np.inf, "unbounded", tab.iterations)
    except _Singular:
        return LpSolution(np.zeros(n), np.inf, "infeasible", tab.iterations)
    x = tab.val[:n].copy()
    return LpSolution(x, float(obj @ x + offset), "optimal", tab.iterations)


def _evict_artificials(tab: _Tableau, first_art: int) -> None:
    """Pivot basic artificials (all at zero) onto real columns where possible."""
    for row in range(len(tab.basis)):
        if tab.basis[row] < first_art:
            continue
        for col in range(first_art):
            if col in tab.basis:
                continue
            if abs(tab.tableau[row, col]) > 1e-7:
                leaving = tab.basis[row]
                tab.val[leaving] = 0.0
                tab.pos[leaving] = 0
                tab.basis[row] = col
                tab.refresh()
                break
        # no real column spans this row: the row is redundant, keep the
        # artificial basic at its fixed zero value


def _model_is_integral(model) -> bool:
    parts = [model.obj, model.rows, model.rhs, np.array([model.obj_offset])]
    finite_lo = model.lb[np.isfinite(model.lb)]
    finite_hi = model.ub[np.isfinite(model.ub)]
    parts += [finite_lo, finite_hi]
    return all(np.all(p == np.round(p)) for p in parts if p.size)


def solve_milp(model, *, max_nodes: int | None = None, incumbent=None, log=None) -> MilpResult:
    """Branch-and-bound over the model's binary columns (minimisation).

    Optionally seeds the search with a known-feasible binary assignment over
    the binary columns.  On node-budget exhaustion the best incumbent and its
    proven gap are returned instead of an error.
    """
    t0 = time.perf_counter()
    if max_nodes is None:
        max_nodes = int(os.environ.get("FLIPOPT_MAX_NODES", "500000"))
    stats = SolveStats()
    bin_cols = np.flatnonzero(model.is_binary)
    integral = _model_is_integral(model)
    best_val: np.ndarray | None = None
    best_obj = np.inf
    heap: list = []
    seq = 0

    def gap_tol():
        if integral:
            return 1e-9
        return max(1e-9, 1e-6 * abs(best_obj))

    def node_lp(fixes):
        lb = model.lb.copy()
        ub = model.ub.copy()
        for col, v in fixes:
            lb[col] = v
            ub[col] = v
        sol = solve_lp(model.obj, model.rows, model.rhs, lb, ub, model.obj_offset)
        stats.lp_iterations += sol.iterations
        return sol

    def try_incumbent(binary_values):
        # re-solve with binaries pinned so incumbents are exactly feasible
        nonlocal best_val, best_obj
        fixes = tuple((int(c), float(round(binary_values[i]))) for i, c in enumerate(bin_cols))
        sol = node_lp(fixes)
        if sol.status == "optimal" and sol.objective < best_obj - 1e-12:
            best_obj = sol.objective
            best_val = sol.values

    def expand(sol, fixes, depth):
        nonlocal seq
        vals = sol.values[bin_cols]
        frac = np.abs(vals - np.round(vals))
        if frac.size == 0 or frac.max() <= INT_TOL:
            try_incumbent(vals)
            return
        pick = int(np.argmax(frac))  # most fractional, first index on ties
        col = int(bin_cols[pick])
        for v in (0.0, 1.0):
            seq += 1
            heappush(heap, (sol.objective, -(depth + 1), seq, fixes + ((col, v),)))

    if incumbent is not None:
        try_incumbent(np.asarray(incumbent, dtype=float))

    root = solve_lp(model.obj, model.rows, model.rhs, model.lb, model.ub, model.obj_offset)
    stats.lp_iterations += root.iterations
    stats.nodes_explored += 1
    if root.status == "infeasible":
        return MilpResult(np.zeros(model.num_cols), np.inf, "infeasible", _finish(stats, t0))
    if root.status == "unbounded":
        return MilpResult(np.zeros(model.num_cols), -np.inf, "unbounded", _finish(stats, t0))
    expand(root, (), 0)

    status = "optimal"
    best_bound = root.objective
    while heap:
        bound, neg_depth, _, fixes = heappop(heap)
        best_bound = bound
        if best_val is not None and bound >= best_obj - gap_tol():
            status = "optimal"
            break
        if stats.nodes_explored >= max_nodes:
            status = "node_budget"
            break
        sol = node_lp(fixes)
        stats.nodes_explored += 1
        if log:
            log(f"node {stats.nodes_explored}: depth {-neg_depth} bound {bound:.6g} {sol.status}")
        if sol.status != "optimal":
            continue
        if best_val is not None and sol.objective >= best_obj - gap_tol():
            continue
        expand(sol, fixes, -neg_depth)

    if best_val is None:
        verdict = "node_budget" if status == "node_budget" else "infeasible"
        return MilpResult(np.zeros(model.num_cols), np.inf, verdict, _finish(stats, t0))
    if status == "optimal":
        stats.gap = 0.0
    else:
        stats.gap = max(0.0, best_obj - best_bound)
    return MilpResult(best_val, best_obj, status, _finish(stats, t0))


def _finish(stats: SolveStats, t0: float) -> SolveStats:
    stats.wall_time = time.perf_counter() - t0
    return stats


def solve_knapsack_dp(profits, weights, capacity) -> tuple[int, list[int]]:
    """Exact 0/1 knapsack over nonnegative integer data.

    Returns the optimal value and one optimal selection, tie-broken toward the
    lexicographically smallest index set.  Non-integer data must go through
    solve_milp instead.
    """
    p = np.asarray(profits)
    w = np.asarray(weights)
    if np.any(p != np.round(p)) or np.any(w != np.round(w)) or capacity != int(capacity):
        raise ValueError("knapsack DP requires integer profits, weights, capacity")
    p = p.astype(np.int64)
    w = w.astype(np.int64)
    if np.any(p < 0) or np.any(w < 0):
        raise ValueError("knapsack DP requires nonnegative data")
    cap = int(capacity)
    if cap < 0:
        raise ValueError("capacity must be nonnegative")
    n = len(p)
    if (n + 1) * (cap + 1) > DP_CELL_BUDGET:
        raise ValueError("DP table budget exceeded; route to solve_milp")

    # value[i][r] = best value using items i..n-1 with r capacity left
    value = np.zeros((n + 1, cap + 1), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        value[i] = value[i + 1]
        wi = int(w[i])
        if wi <= cap:
            take = p[i] + value[i + 1, : cap + 1 - wi]
            value[i, wi:] = np.maximum(value[i + 1, wi:], take)

    chosen = []
    room = cap
    for i in range(n):
        wi = int(w[i])
        if wi <= room and p[i] + value[i + 1, room - wi] == value[i, room]:
            chosen.append(i)
            room -= wi
    return int(value[0, cap]), chosen
