import numpy as np
import pytest
from hypothesis import given, strategies as st

from levyop.grid import (
    FrequencyLattice, GridField, apply_levy_direct, apply_multiplier, fractional_laplacian,
    random_bandlimited, spectral_gradient,
)
from levyop.measure import Atoms, DyadicComb, RadialDensity
from levyop.symbol import Symbol


def test_lattice_mirror_is_involution():
    lat = FrequencyLattice(2, 8)
    np.testing.assert_array_equal(lat.mirror[lat.mirror], np.arange(64))
    np.testing.assert_array_equal(lat.points[lat.mirror][~lat.nyquist], -lat.points[~lat.nyquist])


def test_fractional_laplacian_of_mode():
    u = GridField.from_function(lambda x: np.cos(3 * x), 1, 32)
    v = fractional_laplacian(u, 1.5)
    np.testing.assert_allclose(v.values, 3 ** 1.5 * u.values, atol=1e-12)
    w = fractional_laplacian(u, 1.0, shifted=True)
    np.testing.assert_allclose(w.values, np.sqrt(10) * u.values, atol=1e-12)
    with pytest.raises(ValueError):
        fractional_laplacian(u, 2.0)


def test_gradient_of_product_mode():
    u = GridField.from_function(lambda x, y: np.sin(2 * x) * np.cos(y), 2, 16)
    gx, gy = spectral_gradient(u)
    x, y = u.coords()
    np.testing.assert_allclose(gx.values, 2 * np.cos(2 * x) * np.cos(y), atol=1e-12)
    np.testing.assert_allclose(gy.values, -np.sin(2 * x) * np.sin(y), atol=1e-12)


def test_non_hermitian_multiplier_rejected():
    u = random_bandlimited(1, 16, rng=0)
    with pytest.raises(ValueError, match="Hermitian"):
        apply_multiplier(u, lambda xi: 1j * np.ones(xi.shape[0]))
    with pytest.raises(ValueError, match="finite"):
        apply_multiplier(u, lambda xi: np.full(xi.shape[0], np.nan))


@pytest.mark.parametrize("d,n", [(1, 64), (2, 16)])
def test_direct_matches_multiplier_for_atoms(d, n, rng):
    pos = rng.uniform(-2, 2, size=(5, d))
    m = Atoms(0.7, pos, rng.uniform(0.2, 1.0, size=5))
    u = random_bandlimited(d, n, rng=rng)
    a = apply_levy_direct(u, m)
    b = apply_multiplier(u, Symbol(m).eval)
    np.testing.assert_allclose(a.values, b.values, atol=1e-10)


def test_direct_warns_about_wrapping_atoms():
    with pytest.warns(UserWarning, match="alias"):
        apply_levy_direct(random_bandlimited(1, 16, rng=0), DyadicComb(0.5, 1, 0, 3))


def test_direct_matches_multiplier_comb_with_drift():
    m = DyadicComb(1.5, 1, -3, 1)
    u = random_bandlimited(1, 128, rng=3)
    a = apply_levy_direct(u, m)
    b = apply_multiplier(u, Symbol(m).eval)
    np.testing.assert_allclose(a.values, b.values, atol=1e-9 * np.abs(b.values).max())


def test_direct_rejects_density():
    with pytest.raises(ValueError):
        apply_levy_direct(random_bandlimited(1, 16, rng=0), RadialDensity(1.0))


def test_bytes_round_trip_and_bad_payload():
    u = random_bandlimited(2, 8, rng=1)
    blob = u.to_bytes()
    assert len(blob) == 16 + 8 * 64
    np.testing.assert_array_equal(GridField.from_bytes(blob).values, u.values)
    with pytest.raises(ValueError):
        GridField.from_bytes(blob[:-8])


def test_csv_is_deterministic():
    u = random_bandlimited(1, 8, rng=2)
    assert u.to_csv() == GridField(u.values.copy()).to_csv()
    assert u.to_csv().splitlines()[0] == "x,u"


@given(st.lists(st.floats(0, 2 * np.pi), min_size=1, max_size=6))
def test_evaluate_interpolates_bandlimited(pts):
    u = GridField.from_function(lambda x: np.cos(2 * x) - 0.3 * np.sin(5 * x), 1, 32)
    p = np.array(pts)
    np.testing.assert_allclose(u.evaluate(p), np.cos(2 * p) - 0.3 * np.sin(5 * p), atol=1e-12)


def test_evaluate_on_nodes_returns_values():
    u = random_bandlimited(2, 8, rng=4)
    x, y = u.coords()
    np.testing.assert_allclose(u.evaluate(np.stack([x.ravel(), y.ravel()], 1)), u.values.ravel(), atol=1e-12)


def test_random_bandlimited_is_normalized_and_bandlimited():
    u = random_bandlimited(1, 64, kmax=4, rng=5)
    assert u.l2() == pytest.approx(1.0)
    spec = np.abs(u.spectrum)
    k = np.abs(FrequencyLattice(1, 64).axis)
    assert spec[k > 4].max() < 1e-12


def test_field_arithmetic():
    u = random_bandlimited(1, 16, rng=6)
    v = random_bandlimited(1, 16, rng=7)
    np.testing.assert_allclose((u + v - u).values, v.values, atol=1e-15)
    np.testing.assert_allclose((-(u * 2.0)).values, -2 * u.values)


@pytest.mark.filterwarnings("ignore:atoms beyond the half-period")
@pytest.mark.parametrize("sigma", [0.5, 1.0, 1.5])
def test_direct_route_stable_for_heavy_small_atoms(sigma):
    # atoms down to 2^-30 carry weight 2^{30 sigma}; plain differences would lose ~1e-3 here
    m = DyadicComb(sigma, 2)
    u = random_bandlimited(2, 32, rng=8)
    a = apply_levy_direct(u, m).values
    b = apply_multiplier(u, Symbol(m).eval).values
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)
