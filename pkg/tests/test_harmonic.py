import math

import numpy as np
import pytest

from scripts.errors import InvalidInputError
from scripts.harmonic import (
    HarmonicFn,
    HarmonicKind,
    laplacian_witness,
    parse_function,
    passes_harmonicity_witness,
    sample_domain_points,
)
from scripts.cubature import sup_norm_estimate

Z0 = complex(10, 10)


def test_closed_forms():
    x, y = np.array([0.3, -1.2]), np.array([0.7, 2.0])
    assert HarmonicFn.re_power(2)(x, y) == pytest.approx(x ** 2 - y ** 2)
    assert HarmonicFn.im_power(3)(x, y) == pytest.approx(3 * x ** 2 * y - y ** 3)
    assert HarmonicFn.re_power(3, 1 + 1j)(x, y) == pytest.approx((((x - 1) + 1j * (y - 1)) ** 3).real)
    assert HarmonicFn.log_pole(Z0)(x, y) == pytest.approx(np.log(np.hypot(x - 10, y - 10)))
    assert HarmonicFn.exp_cos()(x, y) == pytest.approx(np.exp(x) * np.cos(y))
    assert HarmonicFn.constant(2.5)(x, y).tolist() == [2.5, 2.5]
    combo = HarmonicFn.combination([(2.0, HarmonicFn.re_power(1)), (-1.0, HarmonicFn.constant(1))])
    assert combo(x, y) == pytest.approx(2 * x - 1)


def test_scalar_evaluation():
    assert float(HarmonicFn.re_power(2)(1.0, 0.0)) == 1.0
    assert float(HarmonicFn.constant(3)(0.0, 0.0)) == 3.0


def test_harmonicity_flags():
    assert HarmonicFn.re_power(4).is_harmonic
    assert not HarmonicFn.radial_square().is_harmonic
    assert not HarmonicFn.custom(lambda x, y: x * y + x ** 2).is_harmonic
    assert HarmonicFn.custom(lambda x, y: x * y, harmonic=True).is_harmonic
    mixed = HarmonicFn.combination([(1.0, HarmonicFn.exp_cos()), (1.0, HarmonicFn.radial_square())])
    assert not mixed.is_harmonic


def test_laplacian_witness(three_unit):
    rng = np.random.default_rng(0)
    for u in (HarmonicFn.re_power(3, Z0), HarmonicFn.re_power(8, Z0), HarmonicFn.log_pole(Z0),
              HarmonicFn.exp_cos(), HarmonicFn.im_power(5)):
        assert passes_harmonicity_witness(u, three_unit, rng), u.describe()
    assert not passes_harmonicity_witness(HarmonicFn.radial_square(), three_unit, rng)
    assert laplacian_witness(HarmonicFn.radial_square(), three_unit, rng) > 0.1


def test_sup_bound_dominates_boundary_samples(three_unit):
    for u in (HarmonicFn.re_power(2, Z0), HarmonicFn.im_power(5), HarmonicFn.log_pole(Z0),
              HarmonicFn.exp_cos(), HarmonicFn.constant(-3)):
        assert u.sup_bound(three_unit) >= sup_norm_estimate(three_unit, u, inflation=1.0)
    assert HarmonicFn.constant(-3).sup_bound(three_unit) == 3.0


def test_sup_bound_values(three_unit):
    # farthest point from z0 = 10 + 10i is 1 + |(0,0) - z0| away
    reach = math.hypot(10, 10) + 1
    assert HarmonicFn.re_power(2, Z0).sup_bound(three_unit) == pytest.approx(reach ** 2)
    assert HarmonicFn.exp_cos().sup_bound(three_unit) == pytest.approx(math.e ** 3)
    combo = HarmonicFn.combination([(2.0, HarmonicFn.constant(1)), (-0.5, HarmonicFn.exp_cos())])
    assert combo.sup_bound(three_unit) == pytest.approx(2 + 0.5 * math.e ** 3)
    assert HarmonicFn.custom(lambda x, y: x).sup_bound(three_unit) is None


def test_log_pole_must_lie_outside(three_unit):
    with pytest.raises(InvalidInputError):
        HarmonicFn.log_pole(complex(1.0, 0.5)).sup_bound(three_unit)
    with pytest.raises(InvalidInputError):
        HarmonicFn.log_pole(0j).sup_bound(three_unit)
    # just outside the base circle of (2, 0)
    assert HarmonicFn.log_pole(complex(3.5, 0)).sup_bound(three_unit) > 0


def test_normalized(three_unit):
    u = HarmonicFn.re_power(6, Z0).normalized(three_unit)
    assert u.sup_bound(three_unit) == pytest.approx(1.0)
    pts = sample_domain_points(three_unit, 500, np.random.default_rng(1))
    assert np.max(np.abs(u(pts[:, 0], pts[:, 1]))) <= 1.0
    with pytest.raises(InvalidInputError):
        HarmonicFn.constant(0.0).normalized(three_unit)


def test_parse_function():
    u = parse_function("re:2@10,10")
    assert (u.kind, u.m, u.z0) == (HarmonicKind.RE_POWER, 2, Z0)
    assert parse_function("const:1") == HarmonicFn.constant(1.0)
    assert parse_function("log@-3,4").z0 == complex(-3, 4)
    assert parse_function("expcos").kind is HarmonicKind.EXP_COS
    assert parse_function("radial2").kind is HarmonicKind.RADIAL_SQUARE

    combo = parse_function("0.5*re:3 + 1e+1*const:1")
    assert combo.kind is HarmonicKind.COMBINATION
    assert [a for a, _ in combo.terms] == [0.5, 10.0]
    assert combo(2.0, 0.0) == pytest.approx(0.5 * 8 + 10)


def test_parse_function_describe_round_trip():
    for text in ("re:2@10,10", "im:5@0,0", "log@10,10", "expcos", "const:2"):
        u = parse_function(text)
        assert parse_function(u.describe()) == u


def test_parse_function_errors():
    for bad in ("", "sin", "re", "re:1.5", "log", "re:2@1"):
        with pytest.raises(InvalidInputError):
            parse_function(bad)
