import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from levyop.grid import GridField, random_bandlimited
from levyop.norms import (
    Weight, bessel_norm, lp_norm, muckenhoupt_constant, power_weight_in_ap, space_time_norm, weight_integral,
)


def test_unweighted_l2_matches_field_norm():
    u = random_bandlimited(2, 16, rng=0)
    assert lp_norm(u, 2.0) == pytest.approx(u.l2(), rel=1e-13)
    assert lp_norm(u, np.inf) == pytest.approx(np.abs(u.values).max())


def test_lp_of_cosine():
    u = GridField.from_function(lambda x: np.cos(x), 1, 64)
    # int_0^{2pi} cos^4 = 3 pi / 4, exact for the trapezoid rule on a fine grid
    assert lp_norm(u, 4.0) == pytest.approx((0.75 * math.pi) ** 0.25, rel=1e-12)


@given(st.floats(-0.9, 3.0), st.floats(0, 6), st.floats(0, 3))
def test_weight_integral_against_quadrature(l, a, width):
    w = Weight.power(l)
    b = a + width
    ref = integrate.quad(lambda x: abs(x - math.pi) ** l, a, b, points=[math.pi] if a < math.pi < b else None)[0]
    assert weight_integral(w, a, b) == pytest.approx(ref, rel=1e-7, abs=1e-10)


def test_weight_integral_nonintegrable_is_infinite():
    assert weight_integral(Weight.power(-1.5), 3.0, 3.5) == np.inf


def test_weighted_norm_of_constant():
    u = GridField(np.ones(64))
    l = 0.5
    full = 2 * math.pi ** (l + 1) / (l + 1)
    assert lp_norm(u, 2.0, Weight.power(l)) == pytest.approx(math.sqrt(full), rel=1e-12)


def test_bessel_norm_of_mode():
    u = GridField.from_function(lambda x: np.sin(3 * x), 1, 32)
    assert bessel_norm(u, 1.0) == pytest.approx(math.sqrt(10) * u.l2(), rel=1e-12)


def test_space_time_norm_trapezoid():
    t = np.linspace(0, 1, 11)
    vals = np.stack([np.full(8, s) for s in t])  # |u(t)| = t on every cell
    nrm = space_time_norm(t, vals[:-1], vals[1:], 2.0, 2.0)
    h = 2 * math.pi / 8
    ref = math.sqrt(8 * h * np.trapezoid(t ** 2, t))
    assert nrm == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("l,p", [(0.5, 2.0), (-0.5, 2.0), (1.0, 3.0), (-0.3, 1.5)])
def test_power_weights_inside_ap_are_finite(l, p):
    assert power_weight_in_ap(l, p)
    res = muckenhoupt_constant(Weight.power(l), p)
    assert not res.diverges and res.constant >= 1.0 - 1e-12


@pytest.mark.parametrize("l,p", [(1.0, 2.0), (1.5, 2.0), (-1.0, 2.0), (2.5, 3.0)])
def test_power_weights_outside_ap_diverge(l, p):
    assert not power_weight_in_ap(l, p)
    assert muckenhoupt_constant(Weight.power(l), p).diverges


def test_ap_constant_of_centered_interval():
    # on (c - r, c + r): avg |x|^l * avg |x|^{-l}  = 1 / ((1 + l)(1 - l)) at p = 2
    l = 0.5
    res = muckenhoupt_constant(Weight.power(l), 2.0, intervals=[[math.pi - 1, math.pi + 1]])
    assert res.constant == pytest.approx(1 / ((1 + l) * (1 - l)), rel=1e-12)


def test_weight_validation():
    with pytest.raises(ValueError):
        Weight("bogus")
    with pytest.raises(ValueError):
        Weight.power(-1.0, axis="temporal")
    with pytest.raises(ValueError):
        lp_norm(GridField(np.ones((4, 4))), 2.0, Weight.power(-2.5))
