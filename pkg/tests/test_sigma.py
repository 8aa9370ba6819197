import math

import numpy as np
import pytest

from kinval.fixtures import named_shape, translated
from kinval.forms import lk0, lk1, lk2, poly_trig, random_poly_trig_params
from kinval.geometry import PointSet, PolygonalRegion, area_perimeter, euler_combinatorial
from kinval.kinematic import MotionFamily, SmoothedForm, kinematic_direct, point_function_f
from kinval.sigma import (calibrate_sigma_orientation, interpolation_integral, kinematic_forms,
                          kinematic_unfolded, point_function_via_omega, product_check, sigma_fixture,
                          sigma_orientation)

from oracles import forms_terms_covered, kinematic_classical


def volumes(A):
    a, p = area_perimeter(A)
    return euler_combinatorial(A), p, a


@pytest.fixture(scope="module")
def covered():
    F = MotionFamily(3.5, 4.0, 1.0, grid=(32, 32, 32))
    X = named_shape("square")
    A = translated(X, (0.2, 0.1))
    return F, X, A, SmoothedForm(F, X)


def test_orientation_constant():
    assert sigma_orientation() == -1
    assert calibrate_sigma_orientation(3) == -1


def test_forms_route_term_breakdown(covered):
    F, X, A, om = covered
    res = kinematic_forms(F, X, lk0(), A, omega=om)
    ref = forms_terms_covered(1.0, volumes(A), volumes(X))
    for k, v in ref.items():
        assert getattr(res, k) == pytest.approx(v, rel=1e-8, abs=1e-10)
    assert res.total == pytest.approx(4 * math.pi + 16, rel=1e-8)


@pytest.mark.parametrize("name,mu", [("half_perimeter", lk1()), ("area", lk2())])
def test_forms_route_other_volumes(covered, name, mu):
    F, X, A, om = covered
    ref = kinematic_classical(name, 1.0, volumes(A), volumes(X))
    assert kinematic_forms(F, X, mu, A, omega=om).total == pytest.approx(ref, rel=1e-8)


def test_unfolded_equals_direct():
    F = MotionFamily(2.0, 3.0, 1.0, grid=(24, 24, 24))
    A = translated(named_shape("L"), (1.0, 0.5))
    X = named_shape("triangle")
    mus = {"chi": lk0(), "hp": lk1(), "pt": poly_trig(random_poly_trig_params(np.random.default_rng(2)))}
    d = kinematic_direct(F, X, mus, A)
    u = kinematic_unfolded(F, X, mus, A)
    assert u.n_nodes == d.n_nodes
    for k in mus:
        assert u[k] == pytest.approx(d[k], rel=1e-10)


def test_localized_product(covered):
    F, X, A, om = covered
    E = PolygonalRegion.from_loops([[(-1, -1), (0.61, -1), (0.61, 2), (-1, 2)]])
    lhs, rhs = product_check(F, X, lk1(), A, E, omega=om)
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_point_terms():
    F = MotionFamily(2.0, 3.0, 1.0)
    X = named_shape("L")
    om = SmoothedForm(F, X)
    x = np.array([2.1, -0.7])
    P = PointSet(x.reshape(1, 2))
    assert interpolation_integral(P, lk0().beta, om) == 0.0
    f = point_function_f(F, X, x)
    assert kinematic_forms(F, X, lk0(), P, omega=om).total == pytest.approx(f, rel=1e-10)
    assert point_function_via_omega(F, X, x, omega=om) == pytest.approx(f, rel=1e-6)


def test_band_forms_route_matches_direct():
    F = MotionFamily(2.0, 3.0, 1.0, grid=(48, 48, 48))
    X = named_shape("square")
    A = translated(X, (1.5, 0.3))
    ref = kinematic_direct(F, X, lk0(), A)["mu"]
    assert kinematic_forms(F, X, lk0(), A).total == pytest.approx(ref, rel=1e-3)


def test_sigma_fixture_is_covered():
    F, X, A = sigma_fixture(0)
    from kinval.geometry import diameter_radius
    assert diameter_radius(A) + diameter_radius(X) <= F.R0
