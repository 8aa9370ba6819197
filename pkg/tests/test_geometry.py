import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kinval.errors import InvalidRegion, NonTransverse
from kinval.fixtures import NAMED_SHAPES, named_shape, translated
from kinval.geometry import (PointSet, PolygonalRegion, RigidMotion, apply_motion, area_perimeter,
                             contains_points, euler_combinatorial, intersect_regions, normal_angle,
                             transversality_check, triangulate)

from oracles import intrinsic_volumes


def test_self_intersecting_loop_rejected():
    with pytest.raises(InvalidRegion):
        PolygonalRegion.from_loops([[(0, 0), (1, 1), (1, 0), (0, 1)]])


def test_degenerate_loop_rejected():
    with pytest.raises(InvalidRegion):
        PolygonalRegion.from_loops([[(0, 0), (1, 0), (2, 0)]])


def test_duplicate_points_rejected():
    with pytest.raises(InvalidRegion):
        PointSet(np.array([[0.0, 0.0], [0.0, 0.0]]))


@pytest.mark.parametrize("name", sorted(NAMED_SHAPES))
def test_named_shapes_match_oracle(name):
    A = named_shape(name)
    chi, hp, area = intrinsic_volumes(NAMED_SHAPES[name])
    a, p = area_perimeter(A)
    assert euler_combinatorial(A) == chi
    assert a == pytest.approx(area, rel=1e-14)
    assert p / 2 == pytest.approx(hp, rel=1e-14)


def test_outward_normal_of_bottom_edge_points_down():
    assert normal_angle((1.0, 0.0)) == pytest.approx(3 * math.pi / 2)


@given(alpha=st.floats(-10, 10), tx=st.floats(-5, 5), ty=st.floats(-5, 5))
def test_area_and_perimeter_invariant_under_motions(alpha, tx, ty):
    A = named_shape("holed")
    B = apply_motion(RigidMotion(alpha, (tx, ty)), A)
    a0, p0 = area_perimeter(A)
    a1, p1 = area_perimeter(B)
    assert a1 == pytest.approx(a0, rel=1e-12)
    assert p1 == pytest.approx(p0, rel=1e-12)
    assert euler_combinatorial(B) == euler_combinatorial(A)


def test_rigid_motion_inverse_and_compose():
    g = RigidMotion(0.7, (1.0, -2.0))
    h = RigidMotion(-1.3, (0.5, 0.25))
    p = np.array([[0.3, 0.9], [-1.0, 2.0]])
    assert np.allclose(g.inverse().apply(g.apply(p)), p)
    assert np.allclose(g.compose(h).apply(p), g.apply(h.apply(p)))


def test_transversality_detects_touching_vertex():
    A = named_shape("square")
    B = translated(A, (1.0, 0.5))  # shares a vertical edge segment
    rep = transversality_check(A, B)
    assert not rep and rep.violations
    with pytest.raises(NonTransverse):
        intersect_regions(A, B)


def test_transverse_intersection_of_squares():
    A = named_shape("square")
    B = translated(A, (0.5, 0.25))
    assert transversality_check(A, B)
    C = intersect_regions(A, B)
    assert area_perimeter(C)[0] == pytest.approx(0.5 * 0.75)


def test_triangulation_covers_area():
    A = named_shape("holed")
    tris = triangulate(A)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(8.0)


def test_contains_points_respects_holes():
    A = named_shape("holed")
    mask = contains_points(A, [[0.5, 0.5], [1.5, 1.5], [4.0, 0.0]])
    assert mask.tolist() == [True, False, False]
