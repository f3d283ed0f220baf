import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import lambertw

from bandspec.trilaw import (
    TriangularLaw,
    inverse_x,
    parametric_moment,
    parametric_point,
    support_from_inverse,
    triangular_cdf,
    triangular_density,
    triangular_moment,
    triangular_transform,
)

E = math.e

# frozen from an independent mpmath route (bisection in eta at 40 digits)
CDF_AT_2_OVER_PI = 0.70264236728467554
F_EDGE_PRODUCT_1E6 = 1.2136447950171666
HARD_EDGE = {4: 1.26666646085809, 6: 1.27989575126663, 8: 1.25788389071584}


def _residual(z, f):
    return abs((1 + f) * cmath.log(1 + f) + 1 / z)


def test_transform_real_point():
    z = -1 / (2 * math.log(2))
    assert triangular_transform(z) == pytest.approx(1.0, abs=1e-12)


def test_transform_far_on_imaginary_axis():
    assert abs(triangular_transform(1e6j) - 1e-6j) <= 1e-11


def test_transform_matches_lambertw_oracle():
    rng = np.random.default_rng(7)
    zs = list(rng.uniform(-5, 5, 300) + 1j * rng.uniform(-3, 3, 300))
    zs += [2.5 + 1e-6j, 0.01 + 1e-6j, -1e-9 + 0j, -50 + 0j, 2.7 - 1e-3j]
    for z in zs:
        c = lambertw(-1 / z, 0)
        assert triangular_transform(z) == pytest.approx(np.exp(c) - 1, rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(1e-4, 10), st.booleans())
def test_transform_residual_and_nevanlinna(x, y, lower):
    z = complex(x, -y if lower else y)
    f = triangular_transform(z, tol=1e-10)
    assert _residual(z, f) <= 1e-10
    assert f.imag * z.imag >= 0
    assert abs(f) <= 1 / abs(z.imag) + 1e-12


def test_transform_rejects_support():
    with pytest.raises(ValueError):
        triangular_transform(1.0)


def test_hard_edge_on_negative_axis_freezes_oracle():
    x = 1e-6
    product = triangular_transform(-x).real * x * math.log(1 / x)
    assert product == pytest.approx(F_EDGE_PRODUCT_1E6, abs=1e-6)
    # slowly decreasing towards 1
    p8 = triangular_transform(-1e-8).real * 1e-8 * math.log(1e8)
    assert 1 < p8 < product


def test_parametric_point_at_half_pi():
    lam, rho = parametric_point(math.pi / 2)
    assert lam == pytest.approx(2 / math.pi, abs=1e-15)
    assert rho == pytest.approx(1 / math.pi, abs=1e-15)


def test_parametric_point_limits():
    assert parametric_point(1e-6)[0] == pytest.approx(E, abs=1e-9)
    assert parametric_point(math.pi - 1e-6)[0] < 1e-6
    with pytest.raises(ValueError):
        parametric_point(math.pi)


def test_density_examples():
    assert triangular_density(2 / math.pi) == pytest.approx(1 / math.pi, abs=1e-10)
    assert triangular_density(3.0) == 0.0
    with pytest.raises(ValueError):
        triangular_density(0.0)


def test_density_square_root_edge():
    r4 = triangular_density(E - 1e-4) / math.sqrt(1e-4)
    r6 = triangular_density(E - 1e-6) / math.sqrt(1e-6)
    assert r4 > 0
    assert abs(r4 / r6 - 1) <= 0.2


def test_hard_edge_values_match_oracle():
    for k, expected in HARD_EDGE.items():
        lam = 10.0**-k
        assert triangular_density(lam) * lam * math.log(lam) ** 2 == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("lam", [0.3, 0.6, 1.0, 1.5, 2.0, 2.5])
def test_transform_density_consistency(lam):
    assert triangular_transform(complex(lam, 1e-5)).imag / math.pi == pytest.approx(triangular_density(lam), abs=1e-3)


def test_cdf_examples_and_dual_route():
    assert triangular_cdf(E) == 1.0
    assert triangular_cdf(0.0) == 0.0
    assert triangular_cdf(E - 1e-12) == pytest.approx(1.0, abs=1e-8)
    value = triangular_cdf(2 / math.pi)
    assert value == pytest.approx(CDF_AT_2_OVER_PI, abs=2e-10)
    # second route: integrate the density over lambda
    tail = quad(triangular_density, 2 / math.pi, E, points=[1.0, 2.0, 2.5], limit=200, epsabs=1e-12)[0]
    assert value == pytest.approx(1 - tail, abs=2e-8)


def test_law_cdf_array_matches_scalar():
    law = TriangularLaw()
    lam = np.array([-1.0, 1e-3, 0.2, 2 / math.pi, 1.7, 2.7, 3.0])
    scalar = [triangular_cdf(x) for x in lam]
    assert np.allclose(law.cdf(lam), scalar, atol=1e-9)


def test_moments_exact():
    assert triangular_moment(1) == Fraction(1, 2)
    assert triangular_moment(2) == Fraction(2, 3)
    assert triangular_moment(3) == Fraction(9, 8)
    assert triangular_moment(4) == Fraction(32, 15)
    with pytest.raises(OverflowError):
        triangular_moment(21)


@pytest.mark.parametrize("k", range(1, 7))
def test_parametric_moments(k):
    assert parametric_moment(k) == pytest.approx(float(triangular_moment(k)), abs=1e-6)


def test_inverse_x_examples():
    assert inverse_x(1.0) == pytest.approx(-1 / (2 * math.log(2)))
    assert inverse_x(E - 1) == pytest.approx(-1 / E)
    assert inverse_x(1 / E - 1) == pytest.approx(E)
    for bad in (0.0, -1.0, -2.0):
        with pytest.raises(ValueError):
            inverse_x(bad)


def test_support_from_inverse():
    lo, hi = support_from_inverse()
    assert abs(lo) <= 1e-9
    assert hi == pytest.approx(E, abs=1e-9)


def test_x_increasing_at_one():
    h = 1e-6
    assert inverse_x(1 + h) > inverse_x(1 - h)
