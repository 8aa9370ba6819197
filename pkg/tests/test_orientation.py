import numpy as np
import pytest
from hypothesis import given, strategies as st

from kinval.orientation import (OrientedSubspace, commutation_sign, coordinate_fixtures, oriented_intersection,
                                same_orientation)

from oracles import commutation_sign as predicted


@pytest.mark.parametrize("n", [2, 3, 4])
def test_commutation_on_coordinate_fixtures(n):
    count = 0
    for X, Y in coordinate_fixtures(n):
        got, want = commutation_sign(X, Y)
        assert got == want == predicted(X.codim, Y.codim)
        count += 1
    assert count > 0


def test_two_lines_in_the_plane_meet_in_a_signed_point():
    e = np.eye(2)
    X = OrientedSubspace(e[:, [0]])
    Y = OrientedSubspace(e[:, [1]])
    assert oriented_intersection(X, Y) in (1, -1)
    assert oriented_intersection(X, Y) == -oriented_intersection(Y, X)


def test_non_transverse_rejected():
    e = np.eye(3)
    X = OrientedSubspace(e[:, [0]])
    Y = OrientedSubspace(e[:, [0, 1]])
    with pytest.raises(ValueError):
        oriented_intersection(X, Y)


def test_intersection_with_whole_space_is_identity():
    e = np.eye(3)
    X = OrientedSubspace(e[:, [2, 0]])
    M = OrientedSubspace(e)
    assert same_orientation(oriented_intersection(X, M), X) == 1


@given(seed=st.integers(0, 2**20))
def test_commutation_on_random_subspaces(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    dx = int(rng.integers(1, n + 1))
    dy = int(rng.integers(n - dx if n - dx > 0 else 1, n + 1))
    dy = max(dy, n - dx)
    X = OrientedSubspace(rng.standard_normal((n, dx)))
    Y = OrientedSubspace(rng.standard_normal((n, dy)))
    got, want = commutation_sign(X, Y)
    assert got == want
