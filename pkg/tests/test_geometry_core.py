import itertools
import math

import pytest

from scripts.errors import GeometryError, InvalidInputError
from scripts.geometry_core import (
    Circle,
    DescartesRoot,
    TangencyTolerance,
    center_triangle_angles,
    curvilinear_triangle_area,
    descartes_fourth_center,
    descartes_fourth_curvature,
    descartes_residual,
    inscribed_circle,
    is_disjoint,
    is_tangent,
    tangency_point,
)

SQRT3 = math.sqrt(3.0)
UNIT = (Circle.make(0, 0, 1), Circle.make(2, 0, 1), Circle.make(1, SQRT3, 1))


def test_circle_validates_radius():
    with pytest.raises(InvalidInputError):
        Circle.make(0, 0, 0)
    with pytest.raises(InvalidInputError):
        Circle.make(0, 0, -1)
    with pytest.raises(InvalidInputError):
        Circle.from_curvature(0, 0, float("inf"))
    c = Circle.from_curvature(1, 2, 4)
    assert c.radius == 0.25
    assert c.area == pytest.approx(math.pi / 16)


def test_fourth_curvature_of_three_unit_circles():
    assert descartes_fourth_curvature(1, 1, 1) == pytest.approx(3 + 2 * SQRT3, rel=1e-15)
    assert descartes_fourth_curvature(1, 1, 1, DescartesRoot.OUTER) == pytest.approx(3 - 2 * SQRT3, rel=1e-15)
    assert descartes_residual(1, 1, 1, 3 + 2 * SQRT3) < 1e-15


def test_fourth_curvature_rejects_non_positive():
    with pytest.raises(InvalidInputError):
        descartes_fourth_curvature(1, 0, 1)
    with pytest.raises(InvalidInputError):
        descartes_fourth_curvature(1, -2, 1)


def test_inscribed_circle_of_three_unit_circles():
    c = inscribed_circle(*UNIT)
    assert c.x == pytest.approx(1.0, abs=1e-14)
    assert c.y == pytest.approx(SQRT3 / 3, abs=1e-14)
    assert c.radius == pytest.approx(2 / SQRT3 - 1, rel=1e-14)
    for p in UNIT:
        assert is_tangent(c, p)


def test_fourth_center_unequal_radii():
    a, b = Circle.make(0, 0, 1), Circle.make(3, 0, 2)
    # third circle of radius 3 tangent to both: (0, 4)
    c = Circle.make(0, 4, 3)
    k4 = descartes_fourth_curvature(a.curvature, b.curvature, c.curvature)
    d = descartes_fourth_center(a, b, c, k4)
    assert d.curvature == pytest.approx(k4)
    for p in (a, b, c):
        assert is_tangent(d, p)


def test_not_tangent_inputs_raise():
    with pytest.raises(GeometryError):
        inscribed_circle(Circle.make(0, 0, 1), Circle.make(3, 0, 1), Circle.make(1, 5, 1))


def test_tangency_tolerance():
    a = Circle.make(0, 0, 1)
    assert is_tangent(a, Circle.make(2 + 1e-12, 0, 1))
    assert not is_tangent(a, Circle.make(2 + 1e-6, 0, 1))
    assert is_disjoint(a, Circle.make(5, 0, 1))
    assert not is_disjoint(a, Circle.make(1.5, 0, 1))
    loose = TangencyTolerance(relative=1e-3, absolute=1e-12)
    assert is_tangent(a, Circle.make(2 + 1e-6, 0, 1), loose)
    with pytest.raises(InvalidInputError):
        TangencyTolerance(relative=0.0)


def test_center_triangle_angles_sum_to_pi():
    assert center_triangle_angles(1, 1, 1) == pytest.approx((math.pi / 3,) * 3)
    assert sum(center_triangle_angles(1, 2, 3)) == pytest.approx(math.pi, rel=1e-15)
    # radii 1, 2, 3 give a 3-4-5 triangle
    assert center_triangle_angles(1, 2, 3)[0] == pytest.approx(math.pi / 2)


def test_curvilinear_area_three_unit_circles():
    assert curvilinear_triangle_area(*UNIT) == pytest.approx(SQRT3 - math.pi / 2, rel=1e-13)


def test_curvilinear_area_unequal_radii_by_law_of_cosines():
    r1, r2, r3 = 1.0, 1.0, 0.5
    a, b = Circle.make(0, 0, r1), Circle.make(2, 0, r2)
    y = math.sqrt((r1 + r3) ** 2 - 1.0)
    c = Circle.make(1, y, r3)

    s12, s13, s23 = r1 + r2, r1 + r3, r2 + r3
    half = (s12 + s13 + s23) / 2
    heron = math.sqrt(half * (half - s12) * (half - s13) * (half - s23))
    ang1 = math.acos((s12 ** 2 + s13 ** 2 - s23 ** 2) / (2 * s12 * s13))
    ang2 = math.acos((s12 ** 2 + s23 ** 2 - s13 ** 2) / (2 * s12 * s23))
    ang3 = math.pi - ang1 - ang2
    expected = heron - 0.5 * (r1 ** 2 * ang1 + r2 ** 2 * ang2 + r3 ** 2 * ang3)

    assert curvilinear_triangle_area(a, b, c) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.09453340412412, rel=1e-9)


def test_tangency_point():
    assert tangency_point(Circle.make(0, 0, 1), Circle.make(2, 0, 1)) == pytest.approx((1.0, 0.0))
    assert tangency_point(Circle.make(0, 0, 1), Circle.make(0, 3, 2)) == pytest.approx((0.0, 1.0))


def test_outer_root_closes_the_quadruple():
    assert descartes_fourth_curvature(2, 2, 3, DescartesRoot.OUTER) == pytest.approx(-1.0, abs=1e-14)
    assert descartes_residual(-1, 2, 2, 3) == pytest.approx(0.0, abs=1e-12)


def test_identical_circles_raise():
    a, _, c = UNIT
    with pytest.raises(GeometryError):
        inscribed_circle(a, a, c)


@pytest.mark.parametrize("triple", [UNIT, (Circle.make(0, 0, 1), Circle.make(3, 0, 2), Circle.make(0, 4, 3))])
def test_inscribed_circle_ignores_input_order(triple):
    first = inscribed_circle(*triple)
    for order in itertools.permutations(triple):
        c = inscribed_circle(*order)
        assert (c.x, c.y, c.radius) == pytest.approx((first.x, first.y, first.radius), abs=1e-12)


@pytest.mark.parametrize("triple", [UNIT, (Circle.make(0, 0, 1), Circle.make(3, 0, 2), Circle.make(0, 4, 3))])
def test_gap_area_splits_into_inscribed_and_children(triple):
    a, b, c = triple
    d = inscribed_circle(a, b, c)
    children = [curvilinear_triangle_area(a, b, d), curvilinear_triangle_area(b, c, d),
                curvilinear_triangle_area(a, c, d)]
    parent = curvilinear_triangle_area(a, b, c)
    assert d.area + math.fsum(children) == pytest.approx(parent, rel=1e-9)
