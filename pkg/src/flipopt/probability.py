"""Flip-count distribution and the protection-failure bound.

Prescribed-0 variables keep their value with probability p, prescribed-1
variables with probability q, independently.  The number of flipped
variables is then a sum of two binomials, and a solution protected against
gamma_cap simultaneous flips fails with probability at most the upper tail
beyond gamma_cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import BlpInstance, UncertaintyPartition

# direct binomial terms below this count, log-space above to dodge overflow
_LOG_SPACE_THRESHOLD = 30


@dataclass(frozen=True)
class FlipModel:
    """Counts of uncertain variables by prescribed value, and stay-put odds."""

    u0: int
    u1: int
    p: float
    q: float

    def __post_init__(self):
        if self.u0 < 0 or self.u1 < 0:
            raise ValueError("u0 and u1 must be nonnegative")
        if not (0 <= self.p <= 1 and 0 <= self.q <= 1):
            raise ValueError("p and q must lie in [0, 1]")

    @property
    def total(self) -> int:
        return self.u0 + self.u1

    @classmethod
    def from_solution(cls, x, part: UncertaintyPartition, p: float, q: float) -> "FlipModel":
        xv = np.asarray(x, dtype=int)
        ones = int(sum(xv[i] for i in part.uncertain))
        return cls(part.num_uncertain - ones, ones, p, q)


def _binom_pmf(k: int, n: int, stay: float) -> float:
    """P(exactly k of n flip) when each stays with probability `stay`."""
    if k < 0 or k > n:
        return 0.0
    flip = 1.0 - stay
    if flip == 0.0:
        return 1.0 if k == 0 else 0.0
    if stay == 0.0:
        return 1.0 if k == n else 0.0
    if n > _LOG_SPACE_THRESHOLD:
        log_term = (
            math.lgamma(n + 1)
            - math.lgamma(k + 1)
            - math.lgamma(n - k + 1)
            + k * math.log(flip)
            + (n - k) * math.log(stay)
        )
        return math.exp(log_term)
    return math.comb(n, k) * flip**k * stay ** (n - k)


def pmf_exact_flips(fm: FlipModel, k: int) -> float:
    """Probability that exactly k uncertain variables change value."""
    if not 0 <= k <= fm.total:
        raise ValueError(f"k={k} outside 0..{fm.total}")
    total = 0.0
    for i in range(k + 1):
        total += _binom_pmf(i, fm.u0, fm.p) * _binom_pmf(k - i, fm.u1, fm.q)
    return total


def infeasibility_upper_bound(fm: FlipModel, gamma_cap: int) -> float:
    """Upper bound on the chance that more than gamma_cap variables flip,
    i.e. that the protected objective level or a protected row fails."""
    if not 0 <= gamma_cap <= fm.total:
        raise ValueError(f"gamma_cap={gamma_cap} outside 0..{fm.total}")
    cdf = sum(pmf_exact_flips(fm, ell) for ell in range(gamma_cap + 1))
    return min(1.0, max(0.0, 1.0 - cdf))


def sample_implementations(x, part: UncertaintyPartition, fm: FlipModel, trials: int, seed) -> np.ndarray:
    """Draw implemented outcomes of x: each uncertain coordinate flips
    independently with its stay-put probability from fm."""
    xv = np.asarray(x, dtype=int)
    rng = np.random.default_rng(seed)
    out = np.tile(xv, (trials, 1))
    uset = list(part.uncertain)
    if not uset:
        return out
    draws = rng.random((trials, len(uset)))
    stay = np.array([fm.q if xv[i] == 1 else fm.p for i in uset])
    flipped = draws >= stay
    block = out[:, uset]
    block[flipped] = 1 - block[flipped]
    out[:, uset] = block
    return out


def empirical_violation_rate(
    sol,
    inst: BlpInstance,
    part: UncertaintyPartition,
    cfg,
    fm: FlipModel,
    trials: int,
    seed,
) -> float:
    """Monte Carlo frequency of the protection-failure event.

    A sampled outcome counts as a violation when its objective is strictly
    worse than the guaranteed level, or some row exceeds its slack-protected
    right-hand side; strictness uses a 1e-9 margin to mirror the bound's
    strict inequalities.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if sol.status != "optimal":
        raise ValueError("need an optimal solution to evaluate")
    samples = sample_implementations(sol.x_star, part, fm, trials, seed)
    objectives = samples @ inst.c
    if inst.sense == "max":
        obj_bad = objectives < sol.gamma - 1e-9
    else:
        obj_bad = objectives > sol.gamma + 1e-9
    lhs = samples @ inst.a.T
    row_bad = (lhs > inst.b + cfg.delta + 1e-9).any(axis=1)
    return float(np.mean(obj_bad | row_bad))
