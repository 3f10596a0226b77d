import numpy as np
import pytest

from flipopt.instance import BlpInstance, UncertaintyPartition

# ten-project investment example: budget 26, projects 1 and 2 may flip
INVEST_C = [7, 3, 9, 9, 10, 7, 4, 2, 6, 2]
INVEST_A = [[4, 5, 9, 8, 4, 4, 6, 6, 2, 3]]
INVEST_B = [26]
DET_OPT = np.array([1, 0, 1, 0, 1, 1, 0, 0, 1, 1])
ROBUST_SP1 = np.array([1, 0, 0, 1, 1, 1, 0, 0, 1, 0])


@pytest.fixture
def invest():
    return BlpInstance(c=INVEST_C, a=INVEST_A, b=INVEST_B, sense="max")


@pytest.fixture
def invest_part():
    return UncertaintyPartition.from_uncertain(10, [0, 1])


def random_min_blp(rng, n_max=12, m_max=3, u_max=8, coeff=10):
    """Random signed-integer minimisation instance with a nonempty uncertain set."""
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    c = rng.integers(-coeff, coeff + 1, size=n).astype(float)
    a = rng.integers(-coeff, coeff + 1, size=(m, n)).astype(float)
    b = rng.integers(0, 4 * coeff, size=m).astype(float)
    inst = BlpInstance(c=c, a=a, b=b, sense="min")
    nu = int(rng.integers(1, min(n, u_max) + 1))
    uncertain = sorted(rng.choice(n, size=nu, replace=False).tolist())
    return inst, UncertaintyPartition.from_uncertain(n, uncertain)
