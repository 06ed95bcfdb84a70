import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from levyop.measure import Atoms, AxisStable, DyadicComb, Polar, RadialDensity, log_grid, stable_constant
from levyop.symbol import (
    BallTransform, Symbol, ball_profile, certify_lower_bound, certify_upper_bound, symbol_table,
    tail_fourier_density, verify_tail_measure_conditions,
)

GRID = log_grid(2.0 ** -10, 2.0 ** 10, 257)[:, None]


def test_radial_sigma_one_constants_are_pi():
    s = Symbol(RadialDensity(1.0, 1, 1.0))
    assert certify_upper_bound(s, GRID).constant == pytest.approx(math.pi, abs=1e-8)
    low = certify_lower_bound(s, GRID)
    assert low.constant == pytest.approx(math.pi, abs=1e-8)
    assert low.chain_ok


@pytest.mark.parametrize("m", [DyadicComb(1.0, 1), RadialDensity(0.5), AxisStable(1.5, 2), DyadicComb(0.5, 2)])
def test_bounds_finite_and_positive(m):
    s = Symbol(m)
    xi = None if m.dim > 1 else GRID
    up = certify_upper_bound(s, xi)
    low = certify_lower_bound(s, xi)
    assert np.isfinite(up.constant)
    assert low.constant > 0
    assert low.chain_ok


@pytest.mark.parametrize("sigma", [0.5, 1.0, 1.5])
def test_quadrature_matches_closed_form(sigma):
    xi = log_grid(2.0 ** -3, 2.0 ** 3, 9)[:, None]
    m = RadialDensity(sigma, 1, 1.0)
    closed = Symbol(m).eval(xi)
    quad = Symbol(m, "quadrature").eval(xi)
    np.testing.assert_allclose(quad, closed, rtol=1e-9)


def test_quadrature_radial_two_dims():
    m = RadialDensity(1.5, 2, 1.0)
    xi = np.array([[0.3, 0.4], [2.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(Symbol(m, "quadrature").eval(xi), Symbol(m).eval(xi), rtol=1e-8)


def test_asymmetric_ray_imaginary_part():
    sigma = 1.5
    m = Polar(sigma, np.array([[1.0]]), np.array([1.0]))
    xi = np.array([[0.7], [-1.3]])
    got = Symbol(m).eval(xi)
    for row, val in zip(xi, got):
        s = row[0]
        re = integrate.quad(lambda t: (math.cos(s * t) - 1) * t ** (-1 - sigma), 0, 1, limit=200)[0] \
            + integrate.quad(lambda t: t ** (-1 - sigma), 1, np.inf, weight="cos", wvar=s)[0] - 1 / sigma
        im = integrate.quad(lambda t: (math.sin(s * t) - s * t) * t ** (-1 - sigma), 0, 1, limit=200)[0] \
            + integrate.quad(lambda t: t ** (-1 - sigma), 1, np.inf, weight="sin", wvar=s)[0] \
            - s / (sigma - 1)
        assert val.real == pytest.approx(re, rel=1e-7)
        assert val.imag == pytest.approx(im, rel=1e-7)


def test_direct_mode_matches_series_for_comb():
    m = DyadicComb(0.7, 2, -10, 10)
    xi = np.random.default_rng(0).uniform(-5, 5, size=(20, 2))
    np.testing.assert_allclose(Symbol(m, "direct").eval(xi), Symbol(m).eval(xi), rtol=1e-12, atol=1e-12)


def test_sigma_one_without_cancellation_rejected():
    with pytest.raises(ValueError, match="cancellation"):
        Symbol(Atoms(1.0, [[1.0]], [1.0]))


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        Symbol(RadialDensity(1.0), "bogus")


def test_symbol_table_columns():
    tab = symbol_table(Symbol(RadialDensity(1.0)), GRID[:5])
    assert tab.shape == (5, 5)
    np.testing.assert_allclose(tab[:, 3], math.pi)


def test_ball_profiles_closed_forms():
    s = np.linspace(0.01, 30, 200)
    np.testing.assert_allclose(ball_profile(1, s), np.sin(s) / s, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(ball_profile(2, s), 2 * special.j1(s) / s, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(ball_profile(3, s), 3 * (np.sin(s) - s * np.cos(s)) / s ** 3, rtol=1e-8, atol=1e-12)
    assert BallTransform(2.0, 2)(np.zeros(2)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        BallTransform(0.0, 1)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 1.5])
def test_tail_fourier_density_one_dim(sigma):
    rho = 0.7
    for xi in (0.1, 1.0, 5.0):
        ref = 2 * integrate.quad(lambda y: y ** (-1 - sigma), rho, np.inf, weight="cos", wvar=xi)[0]
        assert tail_fourier_density(1, sigma, rho, xi)[0] == pytest.approx(ref, rel=1e-8)


def test_tail_conditions_pass_for_examples():
    for m in (DyadicComb(1.0, 1), RadialDensity(0.5), DyadicComb(0.5, 1)):
        rep = verify_tail_measure_conditions(m)
        assert rep.passed, (rep.c_small, rep.c_large)


@given(st.sampled_from([0.4, 1.0, 1.6]), st.floats(0.01, 50.0), st.floats(0.1, 10.0))
def test_radial_symbol_homogeneous(sigma, xi, t):
    s = Symbol(RadialDensity(sigma, 1, 1.0))
    assert s.eval(np.array([[t * xi]]))[0] == pytest.approx(t ** sigma * s.eval(np.array([[xi]]))[0], rel=1e-12)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_polar_symbol_is_hermitian(xi):
    m = Polar(1.3, np.array([[1.0, 0.0], [0.6, 0.8]]), np.array([1.0, 0.5]))
    x = np.array([xi])
    s = Symbol(m)
    assert s.eval(-x)[0] == pytest.approx(np.conj(s.eval(x)[0]), rel=1e-12, abs=1e-12)


def test_stable_constant_matches_radial_symbol():
    for sigma in (0.3, 1.0, 1.7):
        m = RadialDensity(sigma, 1, 1.0)
        assert -Symbol(m).eval(np.array([[1.0]]))[0].real == pytest.approx(stable_constant(sigma), rel=1e-13)
