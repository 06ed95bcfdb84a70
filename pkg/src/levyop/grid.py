"""Real fields on the periodic grid [0, 2pi)^d and Fourier multipliers acting on them."""
from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .measure import LevyMeasure

__all__ = [
    "GridField", "FrequencyLattice", "apply_multiplier", "apply_levy_direct",
    "fractional_laplacian", "spectral_gradient", "random_bandlimited",
    "DEFAULT_RESOLUTION",
]

DEFAULT_RESOLUTION = {1: 256, 2: 128, 3: 32}
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class FrequencyLattice:
    """Integer frequencies {-n/2, ..., n/2 - 1}^d in FFT order."""

    d: int
    n: int

    @cached_property
    def axis(self):
        return np.fft.fftfreq(self.n, 1.0 / self.n)

    @cached_property
    def points(self):
        """(n^d, d) array of frequency vectors, row-major over the FFT array."""
        mesh = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    @cached_property
    def mirror(self):
        """Flat index of the lattice mode -xi (mod n) for every mode."""
        idx = np.indices((self.n,) * self.d).reshape(self.d, -1)
        neg = (-idx) % self.n
        return np.ravel_multi_index(tuple(neg), (self.n,) * self.d)

    @cached_property
    def nyquist(self):
        return np.any(self.points == -self.n // 2, axis=1)

    def __hash__(self):
        return hash((self.d, self.n))


class GridField:
    """Real samples of a 2pi-periodic function on an n^d uniform grid.

    Values are stored with shape ``(n,) * d``. The spectrum is the unnormalized
    FFT and is computed lazily.
    """

    __slots__ = ("values", "_spec")

    def __init__(self, values, spectrum=None):
        v = np.asarray(values, dtype=float)
        if v.ndim not in (1, 2, 3) or len(set(v.shape)) != 1:
            raise ValueError("GridField needs a cubic array in 1, 2 or 3 dimensions")
        n = v.shape[0]
        if n < 2 or n & (n - 1):
            raise ValueError("resolution must be a power of two")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        self.values = v
        self._spec = spectrum

    # -- construction
    @classmethod
    def from_function(cls, fn, d, n=None):
        n = n or DEFAULT_RESOLUTION[d]
        xs = np.meshgrid(*([cls.axis_points(n)] * d), indexing="ij")
        return cls(fn(*xs) * np.ones((n,) * d))

    @classmethod
    def from_spectrum(cls, spec):
        spec = np.asarray(spec, dtype=complex)
        vals = np.fft.ifftn(spec)
        return cls(vals.real, spec)

    @classmethod
    def zeros(cls, d, n):
        return cls(np.zeros((n,) * d))

    @staticmethod
    def axis_points(n):
        return 2 * np.pi * np.arange(n) / n

    # -- shape
    @property
    def d(self):
        return self.values.ndim

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def h(self):
        return 2 * np.pi / self.n

    @property
    def cell_volume(self):
        return self.h ** self.d

    @property
    def lattice(self):
        return FrequencyLattice(self.d, self.n)

    @property
    def spectrum(self):
        if self._spec is None:
            self._spec = np.fft.fftn(self.values)
            self._spec.setflags(write=False)
        return self._spec

    def coords(self):
        return np.meshgrid(*([self.axis_points(self.n)] * self.d), indexing="ij")

    # -- arithmetic
    def _wrap(self, other):
        return other.values if isinstance(other, GridField) else other

    def __add__(self, other):
        return GridField(self.values + self._wrap(other))

    def __sub__(self, other):
        return GridField(self.values - self._wrap(other))

    def __mul__(self, c):
        return GridField(self.values * self._wrap(c))

    __rmul__ = __mul__

    def __neg__(self):
        return GridField(-self.values)

    def l2(self):
        """Discrete L2 norm with cell volume h^d."""
        return math.sqrt(self.cell_volume * float(np.sum(self.values ** 2)))

    def evaluate(self, points):
        """Trigonometric interpolant at arbitrary points, shape (P, d) or (P,) for d = 1."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        coef = self.spectrum.ravel() / self.values.size
        keep = np.abs(coef) > 1e-15 * max(float(np.abs(coef).max()), 1e-300)
        return kernels.trig_eval(coef[keep], self.lattice.points[keep], pts)

    # -- serialization
    def to_bytes(self):
        """int64 header (d, n) followed by row-major float64 values."""
        return struct.pack("<qq", self.d, self.n) + np.ascontiguousarray(self.values, "<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob):
        d, n = struct.unpack("<qq", blob[:16])
        vals = np.frombuffer(blob[16:], dtype="<f8")
        if vals.size != n ** d:
            raise ValueError("field payload does not match its header")
        return cls(vals.reshape((n,) * d).copy())

    def to_csv(self):
        if self.d != 1:
            raise ValueError("CSV export is for d = 1 fields")
        x = self.axis_points(self.n)
        return "x,u\n" + "".join(f"{a:.17g},{b:.17g}\n" for a, b in zip(x, self.values))

    def __repr__(self):
        return f"GridField(d={self.d}, n={self.n})"


def random_bandlimited(d, n, kmax=None, rng=None, normalize=True):
    """Real field with Gaussian Fourier coefficients on modes |xi|_inf <= kmax (default n/8)."""
    rng = np.random.default_rng(rng)
    kmax = n // 8 if kmax is None else kmax
    lat = FrequencyLattice(d, n)
    mask = (np.abs(lat.points) <= kmax).all(axis=1)
    coef = np.zeros(lat.points.shape[0], dtype=complex)
    coef[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    coef = 0.5 * (coef + np.conj(coef[lat.mirror]))
    vals = np.fft.ifftn(coef.reshape((n,) * d)).real
    u = GridField(vals)
    if normalize:
        nrm = u.l2()
        u = GridField(vals / nrm) if nrm > 0 else u
    return u


def _lattice_multiplier(mult, lat):
    if callable(mult):
        xi = lat.points
        m = np.asarray(mult(xi), dtype=complex).ravel()
        m_neg = np.asarray(mult(-xi), dtype=complex).ravel()
        check = np.ones(m.shape[0], dtype=bool)
    else:
        m = np.asarray(mult, dtype=complex).ravel()
        if m.shape[0] != lat.points.shape[0]:
            raise ValueError("multiplier array does not match the lattice")
        m_neg = m[lat.mirror]
        check = ~lat.nyquist  # an array carries no value at the true -xi there
    if not np.all(np.isfinite(m)):
        raise ValueError("multiplier is not finite on the lattice")
    scale = np.maximum(1.0, np.abs(m))
    if np.any((np.abs(m - np.conj(m_neg)) > HERMITIAN_TOL * scale) & check):
        raise ValueError("multiplier is not Hermitian; the output would not be real")
    # the Nyquist plane pairs with itself on the lattice; symmetrize it there
    return np.where(lat.nyquist, 0.5 * (m + np.conj(m[lat.mirror])), m)


def apply_multiplier(u: GridField, mult) -> GridField:
    """Field with spectrum mult(xi) * u_hat(xi).

    ``mult`` is a callable on (N, d) frequency arrays or an array over the
    lattice in FFT order.
    """
    m = _lattice_multiplier(mult, u.lattice)
    spec = u.spectrum * m.reshape(u.values.shape)
    return GridField(np.fft.ifftn(spec).real)


def fractional_laplacian(u: GridField, sigma: float, shifted: bool = False) -> GridField:
    """(-Delta)^{sigma/2} u, or (1 - Delta)^{sigma/2} u when ``shifted``."""
    if not 0 < sigma < 2:
        raise ValueError("sigma must lie in (0, 2)")
    if shifted:
        return apply_multiplier(u, lambda xi: (1 + np.sum(xi ** 2, axis=1)) ** (sigma / 2))
    return apply_multiplier(u, lambda xi: np.linalg.norm(xi, axis=1) ** sigma)


def spectral_gradient(u: GridField):
    """Spectral partial derivatives, Nyquist modes zeroed."""
    lat = u.lattice
    out = []
    for i in range(u.d):
        k = np.where(lat.nyquist, 0.0, lat.points[:, i]).reshape(u.values.shape)
        out.append(GridField(np.fft.ifftn(1j * k * u.spectrum).real))
    return out


def _shift_axis(vals, axis, cells):
    moved = np.moveaxis(vals, axis, -1)
    shp = moved.shape
    out = kernels.trig_shift(np.ascontiguousarray(moved).reshape(-1, shp[-1]), cells)
    return np.moveaxis(out.reshape(shp), -1, axis)


def apply_levy_direct(u: GridField, m: LevyMeasure) -> GridField:
    """sum_a w_a (u(x + y_a) - u(x) - grad u(x) . y_a^{(sigma)}) in real space.

    Off-grid shifts use trigonometric interpolation, exact for fields without a
    Nyquist component. Only purely atomic measures are accepted.
    """
    if m.dim != u.d:
        raise ValueError("measure and field dimensions differ")
    if m.has_density:
        raise ValueError("apply_levy_direct needs a purely atomic measure; use apply_multiplier")
    pos, w = m.atoms()
    if np.any(np.abs(pos) > np.pi):
        warnings.warn("atoms beyond the half-period alias under periodization", stacklevel=2)
    base = u.values
    acc = np.zeros_like(base)
    h = u.h
    rad = np.linalg.norm(pos, axis=1)
    if m.sigma > 1:
        compensated = np.ones(rad.shape, dtype=bool)
    elif m.sigma == 1:
        compensated = rad <= 1.0
    else:
        compensated = np.zeros(rad.shape, dtype=bool)
    short = rad < TAYLOR_CELLS * h
    cache = {}
    for y, wa, comp in zip(pos[short], w[short], compensated[short]):
        acc += wa * _taylor_increment(u, y, 2 if comp else 1, cache)
    for y, wa in zip(pos[~short], w[~short]):
        shifted = base
        for axis in range(u.d):
            if y[axis] != 0.0:
                shifted = _shift_axis(shifted, axis, y[axis] / h)
        acc += wa * (shifted - base)
    long_comp = ~short & compensated
    drift = (w[long_comp, None] * pos[long_comp]).sum(axis=0)
    if np.any(drift != 0):
        for g, b in zip(spectral_gradient(u), drift):
            acc -= b * g.values
    return GridField(acc)


TAYLOR_CELLS = 0.5  # atoms shorter than this many cells use the Taylor series of the increment


def _taylor_increment(u: GridField, y, start, cache):
    """sum_{j >= start} (y . grad)^j u / j! with spectral derivatives (Nyquist modes zeroed).

    Differences u(x + y) - u(x) of a sub-cell shift lose about w eps |u| to
    cancellation, which heavy small atoms amplify; the series does not.
    The lattice bounds |xi . y| by pi/2 here, so the terms fall off fast.
    """
    if "xi" not in cache:
        lat = u.lattice
        cache["xi"] = np.where(lat.nyquist[:, None], 0.0, lat.points)
        cache["xi_max"] = np.abs(cache["xi"]).max(axis=0)
    xi = cache["xi"]
    axes = np.flatnonzero(y)
    phase_max = float(np.abs(xi @ y).max()) if axes.size > 1 else float(np.abs(y) @ cache["xi_max"])
    out = np.zeros_like(u.values)
    if phase_max == 0.0:
        return out
    j, term_size = start, phase_max ** start / math.factorial(start)
    while True:
        if axes.size == 1:
            i = int(axes[0])
            if (i, j) not in cache:
                k = (1j * xi[:, i]) ** j
                cache[(i, j)] = np.fft.ifftn(k.reshape(u.values.shape) * u.spectrum).real
            out += y[i] ** j / math.factorial(j) * cache[(i, j)]
        else:
            k = (1j * (xi @ y)) ** j / math.factorial(j)
            out += np.fft.ifftn(k.reshape(u.values.shape) * u.spectrum).real
        j += 1
        term_size *= phase_max / j
        if term_size < 1e-18 or j > 60:
            return out
