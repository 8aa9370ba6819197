import numpy as np
import pytest

from kinval.fixtures import KINDS, random_region
from kinval.geometry import euler_combinatorial

EXPECTED_CHI = {"convex": 1, "reflex": 1, "holed": 0, "disconnected": 2}


@pytest.mark.parametrize("kind", KINDS)
def test_random_regions_are_valid_with_expected_topology(kind):
    rng = np.random.default_rng(3)
    for _ in range(10):
        A = random_region(rng, kind)
        A.validate()
        assert euler_combinatorial(A) == EXPECTED_CHI[kind]


def test_random_regions_are_reproducible():
    a = random_region(np.random.default_rng(9), "reflex")
    b = random_region(np.random.default_rng(9), "reflex")
    assert all(np.array_equal(x, y) for x, y in zip(a.loops, b.loops))


def test_unknown_kind():
    with pytest.raises(ValueError):
        random_region(np.random.default_rng(0), "spiral")
