"""Binary linear program instances, flip-uncertainty partitions, and outcome sets.

A problem is ``min/max c.x  s.t.  a @ x <= b,  x binary``.  Some variables are
"uncertain": their implemented value may differ from the prescribed one.  The
outcome set of a solution x is every binary vector that agrees with x on the
deterministic variables; its size is 2**|U|.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

# Hard cap for materialising outcome sets; the simulation layer switches to
# sampling far below this.
ENUMERATION_CAP = 20


def _frozen_array(values, dtype=float, ndim=1) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-d array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class BlpInstance:
    """A binary linear program with m rows in <= form.

    c, a, b are stored in the instance's native sense; nothing is negated
    here.  Rows are always `a @ x <= b`.
    """

    c: np.ndarray
    a: np.ndarray
    b: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        object.__setattr__(self, "c", _frozen_array(self.c))
        object.__setattr__(self, "a", _frozen_array(self.a, ndim=2))
        object.__setattr__(self, "b", _frozen_array(self.b))
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if self.n < 1 or self.m < 1:
            raise ValueError("instance needs at least one variable and one row")
        if self.a.shape != (self.m, self.n):
            raise ValueError(
                f"constraint matrix shape {self.a.shape} does not match "
                f"m={self.m}, n={self.n}"
            )

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]

    def min_form_objective(self) -> np.ndarray:
        """Objective coefficients of the equivalent minimisation problem."""
        return -self.c if self.sense == "max" else self.c.copy()

    def is_integral(self) -> bool:
        return bool(
            np.all(self.c == np.round(self.c))
            and np.all(self.a == np.round(self.a))
            and np.all(self.b == np.round(self.b))
        )


@dataclass(frozen=True)
class UncertaintyPartition:
    """Disjoint index sets: deterministic variables C and uncertain variables U."""

    deterministic: tuple[int, ...]
    uncertain: tuple[int, ...]

    def __post_init__(self):
        c, u = set(self.deterministic), set(self.uncertain)
        n = len(self.deterministic) + len(self.uncertain)
        if c & u:
            raise ValueError(f"overlapping indices: {sorted(c & u)}")
        if c | u != set(range(n)):
            raise ValueError("index sets must partition 0..n-1 without gaps")
        object.__setattr__(self, "deterministic", tuple(sorted(c)))
        object.__setattr__(self, "uncertain", tuple(sorted(u)))

    @classmethod
    def from_uncertain(cls, n: int, uncertain: Sequence[int]) -> "UncertaintyPartition":
        u = set(int(i) for i in uncertain)
        if len(u) != len(list(uncertain)):
            raise ValueError("duplicate uncertain indices")
        if any(i < 0 or i >= n for i in u):
            raise ValueError(f"uncertain index out of range 0..{n - 1}")
        return cls(tuple(i for i in range(n) if i not in u), tuple(sorted(u)))

    @property
    def n(self) -> int:
        return len(self.deterministic) + len(self.uncertain)

    @property
    def num_uncertain(self) -> int:
        return len(self.uncertain)


@dataclass(frozen=True)
class RobustConfig:
    """Per-row feasibility slack and optional flip-count budget.

    delta_j relaxes row j to `a_j @ x <= b_j + delta_j`.  gamma_cap bounds how
    many uncertain variables are protected against simultaneously; None means
    all of them.
    """

    delta: np.ndarray
    gamma_cap: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "delta", _frozen_array(self.delta))
        if np.any(self.delta < 0):
            raise ValueError("delta entries must be nonnegative")

    @classmethod
    def uniform(cls, m: int, delta: float, gamma_cap: int | None = None) -> "RobustConfig":
        return cls(np.full(m, float(delta)), gamma_cap)

    def resolved_gamma(self, part: UncertaintyPartition) -> int:
        u = part.num_uncertain
        if self.gamma_cap is None:
            return u
        if not 1 <= self.gamma_cap <= u:
            raise ValueError(f"gamma_cap={self.gamma_cap} outside 1..{u}")
        return self.gamma_cap


def check_solution(inst: BlpInstance, x) -> np.ndarray:
    """Validate a candidate binary vector against the instance; returns an int array."""
    arr = np.asarray(x)
    if arr.shape != (inst.n,):
        raise ValueError(f"solution has shape {arr.shape}, expected ({inst.n},)")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("solution entries must be 0 or 1")
    return arr.astype(int)


def evaluate_objective(inst: BlpInstance, x) -> float:
    """c.x in the instance's native sense."""
    return float(inst.c @ check_solution(inst, x))


def evaluate_constraints(inst: BlpInstance, x) -> np.ndarray:
    """Left-hand side of every row at x."""
    return inst.a @ check_solution(inst, x)


def is_deterministic_feasible(inst: BlpInstance, x) -> bool:
    """True iff x satisfies every row at the original right-hand sides."""
    return bool(np.all(evaluate_constraints(inst, x) <= inst.b))


def outcome_set_size(part: UncertaintyPartition) -> int:
    """Number of implementable outcomes, 2**|U|."""
    return 2 ** part.num_uncertain


def enumerate_outcomes(x, part: UncertaintyPartition) -> Iterator[np.ndarray]:
    """Yield every vector agreeing with x on the deterministic variables.

    Ordering is lexicographic over the sorted uncertain indices (first
    uncertain index is the most significant bit), so golden tests are stable.
    """
    u = part.uncertain
    if len(u) > ENUMERATION_CAP:
        raise ValueError(f"|U|={len(u)} exceeds enumeration cap {ENUMERATION_CAP}")
    base = np.asarray(x, dtype=int)
    if base.shape != (part.n,):
        raise ValueError(f"solution has shape {base.shape}, expected ({part.n},)")
    k = len(u)
    for code in range(2**k):
        y = base.copy()
        for pos, idx in enumerate(u):
            y[idx] = (code >> (k - 1 - pos)) & 1
        yield y


def worst_case_completion(inst: BlpInstance, part: UncertaintyPartition, x) -> np.ndarray:
    """Outcome of x attaining the worst objective over the outcome set.

    Worst means highest cost for min instances and lowest profit for max
    instances; ties on zero coefficients go to 0.
    """
    c_min = inst.min_form_objective()
    y = check_solution(inst, x)
    y = y.copy()
    for i in part.uncertain:
        y[i] = 1 if c_min[i] > 0 else 0
    return y


def save_instance(inst: BlpInstance, part: UncertaintyPartition, path) -> None:
    """Write the on-disk document (uncertain indices are 1-based there)."""
    doc = {
        "n": inst.n,
        "m": inst.m,
        "sense": inst.sense,
        "c": inst.c.tolist(),
        "a": inst.a.tolist(),
        "b": inst.b.tolist(),
        "uncertain": [i + 1 for i in part.uncertain],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_instance(path) -> tuple[BlpInstance, UncertaintyPartition]:
    """Read an instance document and validate every invariant it promises."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a valid instance document: {exc}") from exc
    for key in ("n", "m", "sense", "c", "a", "b", "uncertain"):
        if key not in doc:
            raise ValueError(f"{path}: missing field {key!r}")
    n, m = int(doc["n"]), int(doc["m"])
    inst = BlpInstance(c=doc["c"], a=doc["a"], b=doc["b"], sense=doc["sense"])
    if inst.n != n or inst.m != m:
        raise ValueError(
            f"{path}: declared n={n}, m={m} but arrays give n={inst.n}, m={inst.m}"
        )
    raw = doc["uncertain"]
    if len(set(raw)) != len(raw):
        raise ValueError(f"{path}: duplicate uncertain indices")
    if any(not 1 <= int(i) <= n for i in raw):
        raise ValueError(f"{path}: uncertain indices must be 1-based in 1..{n}")
    part = UncertaintyPartition.from_uncertain(n, [int(i) - 1 for i in raw])
    return inst, part
