"""
Circle geometry for Descartes configurations.

Centers are handled as complex numbers where it helps (the complex Descartes
relation), and as plain (x, y) floats everywhere else.
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from scripts import config
from scripts.errors import DegenerateConfigurationError, GeometryError, InvalidInputError


class Circle(NamedTuple):
    """A circle bounding a disk of positive area. curvature == 1 / radius."""
    x: float
    y: float
    radius: float
    curvature: float

    @classmethod
    def make(cls, x, y, radius):
        if not radius > 0 or not math.isfinite(radius):
            raise InvalidInputError(f"radius must be positive and finite, got {radius!r}")
        return cls(float(x), float(y), float(radius), 1.0 / float(radius))

    @classmethod
    def from_curvature(cls, x, y, curvature):
        if not curvature > 0 or not math.isfinite(curvature):
            raise InvalidInputError(f"curvature must be positive and finite, got {curvature!r}")
        return cls(float(x), float(y), 1.0 / float(curvature), float(curvature))

    @property
    def center(self):
        return (self.x, self.y)

    @property
    def z(self):
        return complex(self.x, self.y)

    @property
    def area(self):
        return math.pi * self.radius * self.radius


@dataclass(frozen=True)
class TangencyTolerance:
    relative: float = config.TOLERANCE_REL
    absolute: float = config.TOLERANCE_ABS

    def __post_init__(self):
        if not (self.relative > 0 and self.absolute > 0):
            raise InvalidInputError("tangency tolerances must be positive")

    def slack(self, radius_sum):
        return self.absolute + self.relative * radius_sum


DEFAULT_TOLERANCE = TangencyTolerance()


class DescartesRoot(str, Enum):
    INNER = "inner"
    OUTER = "outer"


def center_distance(c1, c2):
    return math.hypot(c1.x - c2.x, c1.y - c2.y)


def tangency_residual(c1, c2):
    """Signed gap between two circles: positive apart, negative overlapping."""
    return center_distance(c1, c2) - (c1.radius + c2.radius)


def is_tangent(c1, c2, tol=DEFAULT_TOLERANCE):
    return abs(tangency_residual(c1, c2)) <= tol.slack(c1.radius + c2.radius)


def is_disjoint(c1, c2, tol=DEFAULT_TOLERANCE):
    """Disjoint or tangent; only a genuine overlap returns False."""
    return tangency_residual(c1, c2) >= -tol.slack(c1.radius + c2.radius)


def _require_mutually_tangent(c1, c2, c3, tol):
    for (i, a), (j, b) in (((0, c1), (1, c2)), ((1, c2), (2, c3)), ((0, c1), (2, c3))):
        if not is_tangent(a, b, tol):
            raise GeometryError(
                f"circles {i} and {j} are not tangent "
                f"(residual {tangency_residual(a, b):.3e}, allowed {tol.slack(a.radius + b.radius):.3e})"
            )


def descartes_fourth_curvature(k1, k2, k3, root=DescartesRoot.INNER):
    """k4 = k1 + k2 + k3 ± 2 sqrt(k1 k2 + k2 k3 + k3 k1); inner takes +."""
    for k in (k1, k2, k3):
        if not k > 0 or not math.isfinite(k):
            raise InvalidInputError(f"curvatures must be positive, got {(k1, k2, k3)}")
    root = DescartesRoot(root)
    s = 2.0 * math.sqrt(k1 * k2 + k2 * k3 + k3 * k1)
    if root is DescartesRoot.INNER:
        return k1 + k2 + k3 + s
    return k1 + k2 + k3 - s


def descartes_residual(k1, k2, k3, k4):
    """Relative defect of (k1+k2+k3+k4)^2 = 2(k1^2+k2^2+k3^2+k4^2)."""
    total = k1 + k2 + k3 + k4
    lhs = total * total
    rhs = 2.0 * (k1 * k1 + k2 * k2 + k3 * k3 + k4 * k4)
    return abs(lhs - rhs) / max(lhs, rhs)


def _max_residual(x, y, r, parents):
    return max(abs(math.hypot(x - p.x, y - p.y) - (r + p.radius)) for p in parents)


def _within_tolerance(x, y, r, parents, tol):
    return all(
        abs(math.hypot(x - p.x, y - p.y) - (r + p.radius)) <= tol.slack(r + p.radius)
        for p in parents
    )


def _polish(x, y, r, parents):
    """Newton steps on |p - c_j| = r + r_j, j = 1..3, unknowns (x, y, r)."""
    for _ in range(3):
        jac = np.empty((3, 3))
        f = np.empty(3)
        for j, p in enumerate(parents):
            d = math.hypot(x - p.x, y - p.y)
            if d == 0.0:
                return None
            jac[j] = ((x - p.x) / d, (y - p.y) / d, -1.0)
            f[j] = d - (r + p.radius)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        x, y, r = x + step[0], y + step[1], r + step[2]
        if not r > 0:
            return None
    return x, y, r


def descartes_fourth_center(c1, c2, c3, k4, tol=DEFAULT_TOLERANCE):
    """
    The circle of curvature k4 tangent to c1, c2, c3 inside their
    curvilinear triangle.

    Both roots of the complex Descartes relation are tried; the one with the
    smaller tangency residual wins and must pass the tolerance check.
    """
    _require_mutually_tangent(c1, c2, c3, tol)
    if not k4 > 0 or not math.isfinite(k4):
        raise InvalidInputError(f"k4 must be positive, got {k4!r}")
    parents = (c1, c2, c3)

    # work relative to the centroid to keep k*z terms small
    ox = (c1.x + c2.x + c3.x) / 3.0
    oy = (c1.y + c2.y + c3.y) / 3.0
    z1 = complex(c1.x - ox, c1.y - oy)
    z2 = complex(c2.x - ox, c2.y - oy)
    z3 = complex(c3.x - ox, c3.y - oy)
    k1, k2, k3 = c1.curvature, c2.curvature, c3.curvature

    linear = k1 * z1 + k2 * z2 + k3 * z3
    cross = 2.0 * cmath.sqrt(k1 * k2 * z1 * z2 + k2 * k3 * z2 * z3 + k3 * k1 * z3 * z1)
    r4 = 1.0 / k4

    best = None
    for w in (linear + cross, linear - cross):
        z4 = w / k4
        x4, y4 = z4.real + ox, z4.imag + oy
        residual = _max_residual(x4, y4, r4, parents)
        if best is None or residual < best[0]:
            best = (residual, x4, y4)

    _, x4, y4 = best
    if _within_tolerance(x4, y4, r4, parents, tol):
        return Circle(x4, y4, r4, k4)

    polished = _polish(x4, y4, r4, parents)
    if polished is not None and _within_tolerance(*polished, parents, tol):
        x4, y4, r4 = polished
        return Circle(x4, y4, r4, 1.0 / r4)

    raise DegenerateConfigurationError(
        f"no Descartes candidate is tangent to all three parents "
        f"(best residual {best[0]:.3e}, curvature {k4:.6g})"
    )


def inscribed_circle(c1, c2, c3, tol=DEFAULT_TOLERANCE):
    """The unique circle inside the curvilinear triangle of c1, c2, c3."""
    k4 = descartes_fourth_curvature(c1.curvature, c2.curvature, c3.curvature, DescartesRoot.INNER)
    return descartes_fourth_center(c1, c2, c3, k4, tol)


def center_triangle_angles(r1, r2, r3):
    """Interior angles of the center triangle of three tangent circles.

    Sides are r2+r3, r1+r3, r1+r2 and the semi-perimeter is r1+r2+r3, so the
    half-angle formula tan(A/2) = sqrt((s-b)(s-c) / (s(s-a))) stays exact.
    """
    s = r1 + r2 + r3
    a1 = 2.0 * math.atan(math.sqrt(r2 * r3 / (s * r1)))
    a2 = 2.0 * math.atan(math.sqrt(r1 * r3 / (s * r2)))
    a3 = 2.0 * math.atan(math.sqrt(r1 * r2 / (s * r3)))
    return a1, a2, a3


def curvilinear_triangle_area(c1, c2, c3, tol=DEFAULT_TOLERANCE):
    """Center triangle (Heron: sqrt(s r1 r2 r3)) minus the three sectors."""
    _require_mutually_tangent(c1, c2, c3, tol)
    r1, r2, r3 = c1.radius, c2.radius, c3.radius
    triangle = math.sqrt((r1 + r2 + r3) * r1 * r2 * r3)
    a1, a2, a3 = center_triangle_angles(r1, r2, r3)
    sectors = math.fsum((0.5 * r1 * r1 * a1, 0.5 * r2 * r2 * a2, 0.5 * r3 * r3 * a3))
    area = triangle - sectors
    if not area > 0:
        raise DegenerateConfigurationError(f"curvilinear triangle has non-positive area {area!r}")
    return area


def tangency_point(c1, c2):
    """The point where two tangent circles touch (on the segment of centers)."""
    t = c1.radius / (c1.radius + c2.radius)
    return (c1.x + t * (c2.x - c1.x), c1.y + t * (c2.y - c1.y))
