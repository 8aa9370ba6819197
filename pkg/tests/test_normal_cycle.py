import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from kinval.errors import NonTransverse
from kinval.fixtures import NAMED_SHAPES, named_shape, translated
from kinval.forms import lk0, lk1, poly_trig, random_poly_trig_params
from kinval.geometry import PointSet, PolygonalRegion, RigidMotion, apply_motion, intersect_regions, \
    transversality_check
from kinval.normal_cycle import (act, boundary_residual, build_normal_cycle, calibrate_joint_sign, concat,
                                 decompose_intersection, integrate_form, joint_sign_constant,
                                 legendrian_residual, restrict_to_region)

from oracles import intrinsic_volumes

TWO_PI = 2 * math.pi


@pytest.mark.parametrize("name", sorted(NAMED_SHAPES))
def test_turning_and_half_perimeter(name):
    N = build_normal_cycle(named_shape(name))
    chi, hp, _ = intrinsic_volumes(NAMED_SHAPES[name])
    assert N.turning() / TWO_PI == pytest.approx(chi, abs=1e-12)
    assert integrate_form(N, lk1().beta) == pytest.approx(hp, rel=1e-12)


@pytest.mark.parametrize("name", sorted(NAMED_SHAPES))
def test_cycle_is_closed_and_legendrian(name):
    N = build_normal_cycle(named_shape(name))
    assert boundary_residual(N) == 0
    assert legendrian_residual(N) < 1e-12


def test_point_set_cycle_is_full_circles():
    N = build_normal_cycle(PointSet(np.array([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])))
    assert N.n_edges == 0 and N.n_arcs == 3
    assert integrate_form(N, lk0().beta) == pytest.approx(3.0)


def test_records_round_trip_counts():
    N = build_normal_cycle(named_shape("L"))
    recs = N.to_records()
    assert sum(r["type"] == "edge" for r in recs) == 6
    assert sum(r["type"] == "arc" for r in recs) == 6


@given(alpha=st.floats(-4, 4), tx=st.floats(-3, 3), ty=st.floats(-3, 3), seed=st.integers(0, 2**16))
def test_cycle_of_moved_region_is_moved_cycle(alpha, tx, ty, seed):
    A = named_shape("L")
    g = RigidMotion(alpha, (tx, ty))
    beta = poly_trig(random_poly_trig_params(np.random.default_rng(seed))).beta
    lhs = integrate_form(act(g, build_normal_cycle(A)), beta)
    rhs = integrate_form(build_normal_cycle(apply_motion(g, A)), beta)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_restriction_splits_additively():
    A = named_shape("holed")
    left = PolygonalRegion.from_loops([[(-1, -1), (1.37, -1), (1.37, 4), (-1, 4)]])
    right = PolygonalRegion.from_loops([[(1.37, -1), (5, -1), (5, 4), (1.37, 4)]])
    N = build_normal_cycle(A)
    beta = poly_trig(random_poly_trig_params(np.random.default_rng(1))).beta
    parts = integrate_form(restrict_to_region(N, left), beta) + integrate_form(restrict_to_region(N, right), beta)
    assert parts == pytest.approx(integrate_form(N, beta), rel=1e-11)


def test_joint_sign_is_stable():
    assert joint_sign_constant() == 1
    assert {calibrate_joint_sign(s) for s in range(3)} == {1}


@given(alpha=st.floats(0, TWO_PI), tx=st.floats(-0.8, 1.8), ty=st.floats(-0.8, 1.8), seed=st.integers(0, 2**16))
def test_decomposition_identity(alpha, tx, ty, seed):
    A = named_shape("L")
    B = apply_motion(RigidMotion(alpha, (tx, ty)), named_shape("triangle"))
    assume(transversality_check(A, B))
    C = intersect_regions(A, B)
    assume(not C.is_empty)
    dec = decompose_intersection(A, B)
    assert boundary_residual(dec.total) == 0
    for beta in (lk0().beta, lk1().beta, poly_trig(random_poly_trig_params(np.random.default_rng(seed))).beta):
        ref = integrate_form(build_normal_cycle(C), beta, rule="adaptive")
        got = integrate_form(dec.total, beta, rule="adaptive")
        assert got == pytest.approx(ref, rel=1e-9, abs=1e-10)


def test_decomposition_rejects_non_transverse():
    A = named_shape("square")
    with pytest.raises(NonTransverse):
        decompose_intersection(A, translated(A, (1.0, 0.0)))


def test_concat_preserves_groups():
    N1 = build_normal_cycle(named_shape("square"))
    N2 = build_normal_cycle(named_shape("triangle"))
    both = concat(N1, N2, regroup=True)
    assert both.n_groups == 2
    assert np.allclose(both.turning(per_group=True), [TWO_PI, TWO_PI])
