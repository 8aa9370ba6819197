import math

import numpy as np
import pytest

from kinval.errors import NonVertical, SceneError
from kinval.fixtures import NAMED_SHAPES, named_shape
from kinval.forms import (AffineField, CoefForm1, Form, closedness_check, combine, contact_form, curvature_measure,
                          eval_valuation, lk0, lk1, lk2, make_form, point_function, poly_trig,
                          random_poly_trig_params, reeb_decomposition_check, variation_probe, verticality_check)
from kinval.geometry import PointSet, PolygonalRegion

from oracles import dilation_rates, intrinsic_volumes


@pytest.mark.parametrize("name", sorted(NAMED_SHAPES))
def test_intrinsic_volumes_by_forms(name):
    A = named_shape(name)
    chi, hp, area = intrinsic_volumes(NAMED_SHAPES[name])
    assert eval_valuation(lk0(), A) == pytest.approx(chi, abs=1e-12)
    assert eval_valuation(lk1(), A) == pytest.approx(hp, rel=1e-12)
    assert eval_valuation(lk2(), A) == pytest.approx(area, rel=1e-12)


def test_point_function_of_euler_form_is_one():
    assert point_function(lk0(), (0.3, -2.0)) == pytest.approx(1.0, rel=1e-13)
    assert eval_valuation(lk0(), PointSet(np.array([[0.0, 0.0], [1.0, 0.0]]))) == pytest.approx(2.0)


def test_curvature_measure_additive_in_the_window():
    A = named_shape("L")
    mu = poly_trig(random_poly_trig_params(np.random.default_rng(4)))
    E1 = PolygonalRegion.from_loops([[(-1, -1), (0.73, -1), (0.73, 3), (-1, 3)]])
    E2 = PolygonalRegion.from_loops([[(0.73, -1), (3, -1), (3, 3), (0.73, 3)]])
    total = curvature_measure(mu, A, E1) + curvature_measure(mu, A, E2)
    assert total == pytest.approx(eval_valuation(mu, A), rel=1e-10)


def test_scales_and_combinations():
    A = named_shape("rect")
    mu = combine([lk0(), lk1(), lk2()], [1.0, 2.0, 3.0])
    assert eval_valuation(mu, A) == pytest.approx(1 + 2 * 3 + 3 * 2)
    assert eval_valuation(lk1(2.0), A) == pytest.approx(6.0)


def test_contact_form_is_contact():
    t = np.linspace(0, 2 * math.pi, 7)
    al = contact_form(t)
    # alpha ^ d alpha = -dx^dy^dtheta, never zero
    dal = Form(2, {(0, 2): -np.sin(t), (1, 2): np.cos(t)})
    assert np.allclose(np.abs(al.wedge(dal).comps[(0, 1, 2)]), 1.0)


def test_reeb_decomposition():
    rng = np.random.default_rng(0)
    beta = poly_trig(random_poly_trig_params(rng)).beta
    pts = rng.uniform(-1, 1, (50, 3))
    assert reeb_decomposition_check(beta, pts) < 1e-12


def test_verticality_and_closedness_of_known_forms():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, (40, 3))

    def d_half_perimeter(x, y, t):
        z = 0 * x
        return z, 0.5 * np.cos(t) + z, 0.5 * np.sin(t) + z

    def tilted(x, y, t):
        z = 0 * x
        return np.sin(t) + z, 1.0 + z, z

    assert verticality_check(d_half_perimeter, pts) < 1e-14
    assert closedness_check(d_half_perimeter, pts) < 1e-8
    assert verticality_check(tilted, pts) > 0.1
    assert closedness_check(tilted, pts) > 0.1


@pytest.mark.parametrize("kind", ["translation", "dilation"])
def test_variation_of_area_and_half_perimeter(kind):
    A = named_shape("holed")
    v = AffineField.translation((0.3, -0.7)) if kind == "translation" else AffineField.dilation((0.0, 0.0))
    _, hp_rate, area_rate = dilation_rates(NAMED_SHAPES["holed"])
    if kind == "translation":
        hp_rate = area_rate = 0.0

    def area_form(x, y, t):
        z = 0 * x
        return 1.0 + z, z, z

    def hp_form(x, y, t):
        z = 0 * x
        return z, 0.5 * np.cos(t) + z, 0.5 * np.sin(t) + z

    lhs, rhs = variation_probe(lambda R: eval_valuation(lk2(), R), A, v, area_form)
    assert lhs == pytest.approx(area_rate, abs=1e-8) and rhs == pytest.approx(area_rate, abs=1e-10)
    lhs, rhs = variation_probe(lambda R: eval_valuation(lk1(), R), A, v, hp_form)
    assert lhs == pytest.approx(hp_rate, abs=1e-8) and rhs == pytest.approx(hp_rate, abs=1e-10)


def test_variation_probe_rejects_non_vertical():
    def tilted(x, y, t):
        z = 0 * x
        return z, 1.0 + z, z

    with pytest.raises(NonVertical):
        variation_probe(lambda R: 0.0, named_shape("square"), AffineField.translation((1, 0)), tilted)


def test_make_form_errors():
    with pytest.raises(SceneError):
        make_form("nope")
    with pytest.raises(SceneError):
        make_form("lk0", [1, 2])
    with pytest.raises(SceneError):
        make_form("poly_trig", [0.0] * 1000)


def test_coef_form_algebra():
    beta = CoefForm1(a=lambda x, y, t: x + 0 * t, name="x dx", xy_degree=1, theta_degree=0)
    two = beta.scaled(2.0) + beta
    a, b, c = two(np.array([2.0]), np.array([0.0]), np.array([0.0]))
    assert a[0] == pytest.approx(6.0) and b[0] == 0 and c[0] == 0
