import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kinval.errors import CriticalValue, NotMorse
from kinval.fixtures import NAMED_SHAPES, named_shape, random_region
from kinval.geometry import euler_combinatorial
from kinval.morse import (MorseFunction, critical_points, euler_via_morse, is_morse_on, sublevel_euler,
                          sublevel_euler_clipped)


def test_l_shape_example_direction():
    assert euler_via_morse(MorseFunction.affine((-1, -0.3)), named_shape("L")) == 1


@pytest.mark.parametrize("name", sorted(NAMED_SHAPES))
def test_morse_count_matches_combinatorial(name):
    A = named_shape(name)
    for u in [(0.3, 1.0), (-1.0, 0.2), (0.7, -0.4)]:
        assert euler_via_morse(MorseFunction.affine(u), A) == euler_combinatorial(A)
    assert euler_via_morse(MorseFunction.radial((0.37, 0.41)), A) == euler_combinatorial(A)


def test_degenerate_direction_is_not_morse():
    f = MorseFunction.affine((1.0, 0.0))
    rep = is_morse_on(f, named_shape("square"))
    assert not rep and rep.problems
    with pytest.raises(NotMorse):
        critical_points(f, named_shape("square"))


def test_zero_covector_rejected():
    with pytest.raises(ValueError):
        MorseFunction.affine((0.0, 0.0))


def test_sublevel_counts_match_clipping():
    A = named_shape("holed")
    f = MorseFunction.affine((0.31, 1.0))
    values = sorted(r.value for r in critical_points(f, A))
    probes = [values[0] - 1] + [(a + b) / 2 for a, b in zip(values, values[1:])] + [values[-1] + 1]
    for t in probes:
        assert sublevel_euler(f, A, t) == sublevel_euler_clipped(f, A, t)[0]
    with pytest.raises(CriticalValue):
        sublevel_euler(f, A, values[1])


@given(seed=st.integers(0, 2**20), phi=st.floats(0, 2 * math.pi))
def test_triple_agreement_on_random_regions(seed, phi):
    from kinval.normal_cycle import build_normal_cycle

    rng = np.random.default_rng(seed)
    A = random_region(rng, ["convex", "reflex", "holed", "disconnected"][seed % 4])
    f = MorseFunction.affine((math.cos(phi), math.sin(phi)))
    if not is_morse_on(f, A):
        return
    chi = euler_combinatorial(A)
    assert euler_via_morse(f, A) == chi
    assert round(build_normal_cycle(A).turning() / (2 * math.pi)) == chi
