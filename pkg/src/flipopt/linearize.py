"""Closed-form worst cases over outcome sets, plus enumeration oracles.

For a linear form w.x and an outcome set of x, the maximum over all outcomes
is `sum_C w_i x_i + sum_U max(w_i, 0)`: a deterministic coordinate is pinned,
an uncertain one contributes its coefficient when that helps and zero when it
does not.  max(w, 0) is used instead of (w + |w|)/2 to avoid cancellation;
the value is identical.

The brute-force functions recompute the same quantities by enumerating
outcomes (or protected subsets), and exist to validate every reformulation
built on the closed forms.
"""

from __future__ import annotations

from itertools import combinations
from typing import Mapping

import numpy as np

from .instance import ENUMERATION_CAP, BlpInstance, UncertaintyPartition, enumerate_outcomes


def _coeff_row(inst: BlpInstance, row: int | None) -> np.ndarray:
    """Objective coefficients for row=None, otherwise constraint row coefficients."""
    if row is None:
        return inst.c
    if not 0 <= row < inst.m:
        raise ValueError(f"row {row} outside 0..{inst.m - 1}")
    return inst.a[row]


def _deterministic_values(part: UncertaintyPartition, x_c) -> dict[int, int]:
    if isinstance(x_c, Mapping):
        values = {int(i): int(v) for i, v in x_c.items()}
        missing = [i for i in part.deterministic if i not in values]
        if missing:
            raise ValueError(f"deterministic indices without a value: {missing}")
    else:
        arr = np.asarray(x_c, dtype=int)
        if arr.shape != (part.n,):
            raise ValueError(f"expected mapping or length-{part.n} vector")
        values = {i: int(arr[i]) for i in part.deterministic}
    bad = [i for i in part.deterministic if values[i] not in (0, 1)]
    if bad:
        raise ValueError(f"non-binary values at indices {bad}")
    return values


def worst_case_objective_linear(inst: BlpInstance, part: UncertaintyPartition, x_c) -> float:
    """max over the outcome set of c.y, given the deterministic block of x.

    x_c is either a mapping {index: 0/1} covering every deterministic index or
    a full-length vector whose uncertain entries are ignored.  The result does
    not depend on the uncertain entries of x.
    """
    return _worst_case_linear(inst.c, part, _deterministic_values(part, x_c))


def worst_case_constraint_linear(
    inst: BlpInstance, part: UncertaintyPartition, row: int, x_c
) -> float:
    """max over the outcome set of row `row`'s left-hand side."""
    return _worst_case_linear(_coeff_row(inst, row), part, _deterministic_values(part, x_c))


def _worst_case_linear(w: np.ndarray, part: UncertaintyPartition, values: dict[int, int]) -> float:
    det = sum(w[i] * values[i] for i in part.deterministic)
    unc = sum(max(w[i], 0.0) for i in part.uncertain)
    return float(det + unc)


def brute_force_worst_case(
    inst: BlpInstance, part: UncertaintyPartition, x, row: int | None = None
) -> float:
    """max of c.y (row=None) or a_row.y over every enumerated outcome of x."""
    if part.num_uncertain > ENUMERATION_CAP:
        raise ValueError(f"|U|={part.num_uncertain} exceeds cap {ENUMERATION_CAP}")
    w = _coeff_row(inst, row)
    return max(float(w @ y) for y in enumerate_outcomes(x, part))


def brute_force_cc_protection(
    inst: BlpInstance,
    part: UncertaintyPartition,
    x,
    gamma_cap: int,
    row: int | None = None,
) -> float:
    """Budgeted worst case by subset enumeration.

    Over all subsets S of the uncertain indices with |S| <= gamma_cap, the
    protected coordinates contribute max(w_i, 0) and the rest keep their
    prescribed contribution w_i x_i; the deterministic part is added on.
    Equals brute_force_worst_case when gamma_cap = |U|.
    """
    if part.num_uncertain > ENUMERATION_CAP:
        raise ValueError(f"|U|={part.num_uncertain} exceeds cap {ENUMERATION_CAP}")
    if gamma_cap < 0:
        raise ValueError("gamma_cap must be nonnegative")
    w = _coeff_row(inst, row)
    xv = np.asarray(x, dtype=int)
    u = part.uncertain
    det = float(sum(w[i] * xv[i] for i in part.deterministic))
    nominal = [w[i] * xv[i] for i in u]
    lift = [max(w[i], 0.0) - w[i] * xv[i] for i in u]

    best = -np.inf
    cap = min(gamma_cap, len(u))
    for size in range(cap + 1):
        for subset in combinations(range(len(u)), size):
            val = sum(nominal) + sum(lift[k] for k in subset)
            best = max(best, val)
    return det + float(best)
