"""Levy measures of order sigma in (0, 2) and their elementary functionals.

All variants are immutable. Functionals are exact: closed forms for the power
densities, finite sums for atomic variants. Balls are open, so
``tail_mass(r)`` integrates over ``{|y| >= r}`` and atoms on the sphere count
toward the tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gamma

__all__ = [
    "LevyMeasure", "RadialDensity", "AxisStable", "DyadicComb", "Polar", "Atoms",
    "Sum", "Scaled", "TimeDependentMeasure", "AssumptionReport", "MomentReport",
    "tail_mass", "truncated_moment", "check_moment_bounds", "cancellation_defect",
    "nondegeneracy_functional", "check_assumptions", "log_grid", "xi_grid",
    "sphere_area", "radial_transverse_constant", "stable_constant",
]

CANCELLATION_TOL = 1e-10
DEFAULT_GRID_POINTS = 257
DEFAULT_GRID_RANGE = (2.0 ** -10, 2.0 ** 10)


# ------------------------------------------------------------ constants

def sphere_area(d):
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def radial_transverse_constant(d, sigma):
    """int_{R^{d-1}} (1 + |z|^2)^{-(d+sigma)/2} dz.

    Integrating |y|^{-d-sigma} over the hyperplane {y_1 = t} gives this
    constant times |t|^{-1-sigma}.
    """
    return math.pi ** ((d - 1) / 2) * math.gamma((1 + sigma) / 2) / math.gamma((d + sigma) / 2)


def stable_constant(sigma):
    """int_R (1 - cos t) |t|^{-1-sigma} dt."""
    return math.pi / (math.gamma(1 + sigma) * math.sin(math.pi * sigma / 2))


def log_grid(lo=DEFAULT_GRID_RANGE[0], hi=DEFAULT_GRID_RANGE[1], points=DEFAULT_GRID_POINTS):
    """Base-2 log-spaced grid; exact powers of two land on the grid when possible."""
    return np.exp2(np.linspace(math.log2(lo), math.log2(hi), points))


def _directions(d, count=None):
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        count = count or 32
        ang = np.pi * 2 * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    # axes, face diagonals, body diagonals, then a Fibonacci sphere
    dirs = [np.eye(d), -np.eye(d)]
    for i in range(d):
        for j in range(i + 1, d):
            for si in (1, -1):
                for sj in (1, -1):
                    v = np.zeros(d)
                    v[i], v[j] = si, sj
                    dirs.append(v[None, :] / math.sqrt(2))
    if d == 3:
        for s in np.array(np.meshgrid([1, -1], [1, -1], [1, -1])).T.reshape(-1, 3):
            dirs.append(s[None, :] / math.sqrt(3))
        count = count or 64
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = math.pi * (1 + 5 ** 0.5) * k
        rxy = np.sqrt(1 - z * z)
        dirs.append(np.stack([rxy * np.cos(phi), rxy * np.sin(phi), z], axis=1))
    return np.concatenate(dirs, axis=0)


def xi_grid(d, lo=DEFAULT_GRID_RANGE[0], hi=DEFAULT_GRID_RANGE[1],
            points=DEFAULT_GRID_POINTS, directions=None):
    """Frequencies |xi| on a log grid times a fixed set of unit directions, shape (N, d)."""
    mags = log_grid(lo, hi, points)
    dirs = _directions(d) if directions is None else np.asarray(directions, dtype=float)
    return (mags[:, None, None] * dirs[None, :, :]).reshape(-1, d)


def _as_out(value, like):
    return float(value) if np.ndim(like) == 0 else value


def _check_order(sigma):
    if not 0.0 < sigma < 2.0:
        raise ValueError(f"order sigma must lie in (0, 2), got {sigma}")


# ---------------------------------------------------------------- base class

class LevyMeasure:
    """Base class. Subclasses provide ``sigma``, ``dim`` and the functionals."""

    sigma: float
    dim: int

    # -- functionals (vectorized over r / xi where noted)
    def tail_mass(self, r):
        raise NotImplementedError

    def moment(self, c, r, region):
        raise NotImplementedError

    def cancellation_defect(self, r1, r2):
        raise NotImplementedError

    def nondegeneracy(self, xi):
        """int_{|xi.y| <= 1} |xi.y|^2 nu(dy) for each row of ``xi``."""
        raise NotImplementedError

    def symbol(self, xi):
        """Closed-form or exact-series symbol m(xi) for each row of ``xi``."""
        raise NotImplementedError

    # -- structure
    def atoms(self):
        """Atomic part as ``(positions (M, d), weights (M,))``."""
        return np.zeros((0, self.dim)), np.zeros(0)

    @property
    def has_density(self):
        return False

    @property
    def symmetric(self):
        return True

    def describe(self):
        raise NotImplementedError

    # -- shared helpers
    def compensator_drift(self):
        """sum_a w_a y_a^{(sigma)} over the atomic part."""
        pos, w = self.atoms()
        if self.sigma < 1 or pos.shape[0] == 0:
            return np.zeros(self.dim)
        if self.sigma == 1:
            keep = np.linalg.norm(pos, axis=1) <= 1.0
            return (w[keep, None] * pos[keep]).sum(axis=0)
        return (w[:, None] * pos).sum(axis=0)

    def _validate_moment(self, c, region):
        if region not in ("inside", "outside"):
            raise ValueError("region must be 'inside' or 'outside'")
        if region == "outside" and not c < self.sigma:
            raise ValueError(f"outside moment diverges unless c < sigma ({c} >= {self.sigma})")
        if region == "inside" and not c > self.sigma:
            raise ValueError(f"inside moment diverges unless c > sigma ({c} <= {self.sigma})")

    def __add__(self, other):
        return Sum((self, other))

    def __rmul__(self, factor):
        return Scaled(float(factor), self)


@dataclass(frozen=True)
class RadialDensity(LevyMeasure):
    """c |y|^{-d-sigma} dy."""

    sigma: float
    dim: int = 1
    c: float = 1.0

    def __post_init__(self):
        _check_order(self.sigma)
        if self.c <= 0 or self.dim < 1:
            raise ValueError("RadialDensity needs c > 0 and dim >= 1")

    @property
    def _mass(self):
        return self.c * sphere_area(self.dim)

    def tail_mass(self, r):
        r = np.asarray(r, dtype=float)
        return _as_out(self._mass * r ** -self.sigma / self.sigma, r)

    def moment(self, c, r, region):
        self._validate_moment(c, region)
        r = np.asarray(r, dtype=float)
        return _as_out(self._mass * r ** (c - self.sigma) / abs(self.sigma - c), r)

    def cancellation_defect(self, r1, r2):
        return np.zeros(self.dim)

    def nondegeneracy(self, xi):
        xi = np.atleast_2d(xi)
        k = radial_transverse_constant(self.dim, self.sigma)
        return self.c * k * 2.0 / (2.0 - self.sigma) * np.linalg.norm(xi, axis=1) ** self.sigma

    def symbol_constant(self):
        return self.c * radial_transverse_constant(self.dim, self.sigma) * stable_constant(self.sigma)

    def symbol(self, xi):
        xi = np.atleast_2d(xi)
        return -self.symbol_constant() * np.linalg.norm(xi, axis=1) ** self.sigma + 0j

    @property
    def has_density(self):
        return True

    def describe(self):
        return {"kind": "radial", "sigma": self.sigma, "dim": self.dim, "c": self.c}


@dataclass(frozen=True)
class AxisStable(LevyMeasure):
    """sum_i c |y_i|^{-1-sigma} dy_i on each coordinate axis."""

    sigma: float
    dim: int = 1
    c: float = 1.0

    def __post_init__(self):
        _check_order(self.sigma)
        if self.c <= 0 or self.dim < 1:
            raise ValueError("AxisStable needs c > 0 and dim >= 1")

    def tail_mass(self, r):
        r = np.asarray(r, dtype=float)
        return _as_out(self.dim * 2 * self.c * r ** -self.sigma / self.sigma, r)

    def moment(self, c, r, region):
        self._validate_moment(c, region)
        r = np.asarray(r, dtype=float)
        return _as_out(self.dim * 2 * self.c * r ** (c - self.sigma) / abs(self.sigma - c), r)

    def cancellation_defect(self, r1, r2):
        return np.zeros(self.dim)

    def nondegeneracy(self, xi):
        xi = np.atleast_2d(xi)
        return self.c * 2.0 / (2.0 - self.sigma) * (np.abs(xi) ** self.sigma).sum(axis=1)

    def symbol(self, xi):
        xi = np.atleast_2d(xi)
        return -self.c * stable_constant(self.sigma) * (np.abs(xi) ** self.sigma).sum(axis=1) + 0j

    @property
    def has_density(self):
        return True

    def describe(self):
        return {"kind": "axis", "sigma": self.sigma, "dim": self.dim, "c": self.c}


class _AtomicMixin:
    """Exact functionals for measures that are finite sums of weighted atoms."""

    def tail_mass(self, r):
        pos, w = self.atoms()
        rad = np.linalg.norm(pos, axis=1)
        r = np.asarray(r, dtype=float)
        out = (rad[None, :] >= r.reshape(-1, 1)) @ w
        return _as_out(out.reshape(r.shape), r)

    def moment(self, c, r, region):
        self._validate_moment(c, region)
        pos, w = self.atoms()
        rad = np.linalg.norm(pos, axis=1)
        r = np.asarray(r, dtype=float)
        rr = r.reshape(-1, 1)
        sel = rad[None, :] >= rr if region == "outside" else rad[None, :] < rr
        out = sel @ (w * rad ** c)
        return _as_out(out.reshape(r.shape), r)

    def cancellation_defect(self, r1, r2):
        pos, w = self.atoms()
        rad = np.linalg.norm(pos, axis=1)
        sel = (rad >= r1) & (rad <= r2)
        return (w[sel, None] * pos[sel]).sum(axis=0)

    def nondegeneracy(self, xi):
        from .kernels import _CHUNK
        xi = np.atleast_2d(xi)
        pos, w = self.atoms()
        out = np.empty(xi.shape[0])
        step = max(1, _CHUNK // max(1, pos.shape[0]))
        for s in range(0, xi.shape[0], step):
            dot = xi[s:s + step] @ pos.T
            sq = dot * dot
            out[s:s + step] = np.where(np.abs(dot) <= 1.0, sq, 0.0) @ w
        return out

    def symbol(self, xi):
        from . import kernels
        pos, w = self.atoms()
        return kernels.atom_symbol(np.atleast_2d(np.asarray(xi, dtype=float)), pos, w,
                                   self.compensator_drift())

    @property
    def symmetric(self):
        return _atoms_symmetric(*self.atoms())


def _atoms_symmetric(pos, w, tol=1e-12):
    if pos.shape[0] == 0:
        return True
    key = np.round(pos / tol).astype(np.int64)
    table = {}
    for k, wk in zip(map(tuple, key), w):
        table[k] = table.get(k, 0.0) + wk
    for k, wk in table.items():
        mirror = tuple(-v for v in k)
        if abs(table.get(mirror, 0.0) - wk) > tol * max(1.0, abs(wk)):
            return False
    return True


@dataclass(frozen=True)
class DyadicComb(_AtomicMixin, LevyMeasure):
    """sum_i sum_{k_min <= k <= k_max} 2^{-k sigma} (delta_{2^k e_i} + delta_{-2^k e_i})."""

    sigma: float
    dim: int = 1
    k_min: int = -30
    k_max: int = 30

    def __post_init__(self):
        _check_order(self.sigma)
        if self.k_min > self.k_max:
            raise ValueError("DyadicComb needs k_min <= k_max")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def atoms(self):
        k = np.arange(self.k_min, self.k_max + 1, dtype=float)
        rad = np.exp2(k)
        wk = np.exp2(-k * self.sigma)
        eye = np.eye(self.dim)
        pos = np.concatenate([s * rad[:, None, None] * eye[None, :, :] for s in (1.0, -1.0)])
        pos = pos.reshape(-1, self.dim)
        w = np.tile(np.repeat(wk, self.dim), 2)
        return pos, w

    def symbol(self, xi):
        """Per-axis dyadic series sum_k 2^{1 - k sigma} (cos(2^k xi_i) - 1)."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        k = np.arange(self.k_min, self.k_max + 1, dtype=float)
        scale = np.exp2(k)
        wk = np.exp2(1.0 - k * self.sigma)
        out = np.zeros(xi.shape[0])
        for i in range(self.dim):
            half = np.sin(0.5 * xi[:, i:i + 1] * scale[None, :])
            out -= 2.0 * (half * half) @ wk
        return out + 0j

    @property
    def symmetric(self):
        return True

    def tail_truncation_error(self):
        """Mass of the omitted atoms with k > k_max."""
        return 2 * self.dim * 2.0 ** (-(self.k_max + 1) * self.sigma) / (1 - 2.0 ** -self.sigma)

    def second_moment_truncation_error(self, xi_norm):
        """Bound on sum over omitted k < k_min of 2^{-k sigma} |2^k xi|^2 (both signs, all axes)."""
        s2 = 2.0 - self.sigma
        return 2 * self.dim * xi_norm ** 2 * 2.0 ** ((self.k_min - 1) * s2) / (1 - 2.0 ** -s2)

    def describe(self):
        return {"kind": "comb", "sigma": self.sigma, "dim": self.dim,
                "k_min": self.k_min, "k_max": self.k_max}


@dataclass(frozen=True)
class Atoms(_AtomicMixin, LevyMeasure):
    """Finite atomic measure sum_a w_a delta_{y_a}."""

    sigma: float
    positions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_order(self.sigma)
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[0] == 1 and np.ndim(self.positions) == 1 and pos.shape[1] > 1 \
                and len(self.weights) == pos.shape[1]:
            pos = pos.T  # 1-d positions given as a flat list
        w = np.asarray(self.weights, dtype=float).ravel()
        if pos.shape[0] != w.shape[0]:
            raise ValueError("positions and weights disagree in length")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if np.any(np.linalg.norm(pos, axis=1) == 0):
            raise ValueError("atoms may not sit at the origin")
        pos.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.positions.shape[1]

    def atoms(self):
        return self.positions, self.weights

    @classmethod
    def symmetric_pair(cls, sigma, h, w, dim=1, axis=0):
        e = np.zeros(dim)
        e[axis] = h
        return cls(sigma, np.stack([e, -e]), np.array([w, w]))

    def describe(self):
        return {"kind": "atoms", "sigma": self.sigma, "dim": self.dim,
                "atoms": [list(map(float, p)) + [float(wi)]
                          for p, wi in zip(self.positions, self.weights)]}

    def __eq__(self, other):
        return (isinstance(other, Atoms) and self.sigma == other.sigma
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.sigma, self.positions.tobytes(), self.weights.tobytes()))


@dataclass(frozen=True)
class Polar(LevyMeasure):
    """r^{-1-sigma} dr mu(dtheta) with mu a finite atomic measure on the sphere."""

    sigma: float
    directions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_order(self.sigma)
        th = np.atleast_2d(np.asarray(self.directions, dtype=float))
        nrm = np.linalg.norm(th, axis=1)
        if np.any(nrm == 0):
            raise ValueError("zero direction")
        th = th / nrm[:, None]
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape[0] != th.shape[0] or np.any(w < 0):
            raise ValueError("need one nonnegative weight per direction")
        object.__setattr__(self, "directions", th)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.directions.shape[1]

    def tail_mass(self, r):
        r = np.asarray(r, dtype=float)
        return _as_out(self.weights.sum() * r ** -self.sigma / self.sigma, r)

    def moment(self, c, r, region):
        self._validate_moment(c, region)
        r = np.asarray(r, dtype=float)
        return _as_out(self.weights.sum() * r ** (c - self.sigma) / abs(self.sigma - c), r)

    def cancellation_defect(self, r1, r2):
        s = self.sigma
        g = math.log(r2 / r1) if s == 1 else (r2 ** (1 - s) - r1 ** (1 - s)) / (1 - s)
        return g * (self.weights[:, None] * self.directions).sum(axis=0)

    def nondegeneracy(self, xi):
        dots = np.abs(np.atleast_2d(xi) @ self.directions.T)
        return (dots ** self.sigma) @ self.weights / (2.0 - self.sigma)

    def symbol(self, xi):
        s = np.atleast_2d(xi) @ self.directions.T
        a = np.abs(s)
        half_c = 0.5 * stable_constant(self.sigma)
        re = -half_c * a ** self.sigma
        if self.sigma == 1:
            with np.errstate(divide="ignore", invalid="ignore"):
                im = np.where(a > 0, s * (1 - np.euler_gamma - np.log(a)), 0.0)
        else:
            im = np.sign(s) * math.tan(math.pi * self.sigma / 2) * half_c * a ** self.sigma
        return (re + 1j * im) @ self.weights

    @property
    def has_density(self):
        return True

    @property
    def symmetric(self):
        return _atoms_symmetric(self.directions, self.weights)

    def describe(self):
        return {"kind": "polar", "sigma": self.sigma, "dim": self.dim,
                "directions": [list(map(float, d)) + [float(w)]
                               for d, w in zip(self.directions, self.weights)]}

    def __eq__(self, other):
        return (isinstance(other, Polar) and self.sigma == other.sigma
                and np.array_equal(self.directions, other.directions)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.sigma, self.directions.tobytes(), self.weights.tobytes()))


@dataclass(frozen=True)
class Sum(LevyMeasure):
    """Sum of measures sharing sigma and dimension."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("empty Sum")
        s, d = parts[0].sigma, parts[0].dim
        if any(p.sigma != s or p.dim != d for p in parts):
            raise ValueError("all summands must share sigma and dim")
        object.__setattr__(self, "parts", parts)

    @property
    def sigma(self):
        return self.parts[0].sigma

    @property
    def dim(self):
        return self.parts[0].dim

    def tail_mass(self, r):
        return sum(p.tail_mass(r) for p in self.parts)

    def moment(self, c, r, region):
        self._validate_moment(c, region)
        return sum(p.moment(c, r, region) for p in self.parts)

    def cancellation_defect(self, r1, r2):
        return sum(p.cancellation_defect(r1, r2) for p in self.parts)

    def nondegeneracy(self, xi):
        return sum(p.nondegeneracy(xi) for p in self.parts)

    def symbol(self, xi):
        return sum(p.symbol(xi) for p in self.parts)

    def atoms(self):
        got = [p.atoms() for p in self.parts]
        return (np.concatenate([g[0] for g in got]).reshape(-1, self.dim),
                np.concatenate([g[1] for g in got]))

    @property
    def has_density(self):
        return any(p.has_density for p in self.parts)

    @property
    def symmetric(self):
        return all(p.symmetric for p in self.parts)

    def describe(self):
        return {"kind": "sum", "parts": [p.describe() for p in self.parts]}


@dataclass(frozen=True)
class Scaled(LevyMeasure):
    """factor * inner."""

    factor: float
    inner: LevyMeasure

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scale factor must be positive")

    @property
    def sigma(self):
        return self.inner.sigma

    @property
    def dim(self):
        return self.inner.dim

    def tail_mass(self, r):
        return self.factor * self.inner.tail_mass(r)

    def moment(self, c, r, region):
        return self.factor * self.inner.moment(c, r, region)

    def cancellation_defect(self, r1, r2):
        return self.factor * self.inner.cancellation_defect(r1, r2)

    def nondegeneracy(self, xi):
        return self.factor * self.inner.nondegeneracy(xi)

    def symbol(self, xi):
        return self.factor * self.inner.symbol(xi)

    def atoms(self):
        pos, w = self.inner.atoms()
        return pos, self.factor * w

    def compensator_drift(self):
        return self.factor * self.inner.compensator_drift()

    @property
    def has_density(self):
        return self.inner.has_density

    @property
    def symmetric(self):
        return self.inner.symmetric

    def describe(self):
        return {"kind": "scaled", "factor": self.factor, "inner": self.inner.describe()}


# ------------------------------------------------------- time dependence

@dataclass(frozen=True)
class TimeDependentMeasure:
    """Piecewise-constant schedule of measures on [0, T).

    ``schedule`` holds ``(t_start, t_end, measure)`` triples that tile [0, T)
    in order.
    """

    schedule: tuple

    def __post_init__(self):
        sched = tuple((float(a), float(b), m) for a, b, m in self.schedule)
        if not sched:
            raise ValueError("empty schedule")
        if sched[0][0] != 0.0:
            raise ValueError("schedule must start at t = 0")
        for (a, b, m), nxt in zip(sched, sched[1:] + (None,)):
            if not b > a:
                raise ValueError("schedule intervals must have positive length")
            if nxt is not None and nxt[0] != b:
                raise ValueError("schedule intervals must be contiguous")
        s, d = sched[0][2].sigma, sched[0][2].dim
        if any(m.sigma != s or m.dim != d for _, _, m in sched):
            raise ValueError("all pieces must share sigma and dim")
        object.__setattr__(self, "schedule", sched)

    @classmethod
    def constant(cls, measure, horizon):
        return cls(((0.0, horizon, measure),))

    @property
    def horizon(self):
        return self.schedule[-1][1]

    @property
    def sigma(self):
        return self.schedule[0][2].sigma

    @property
    def dim(self):
        return self.schedule[0][2].dim

    @property
    def pieces(self):
        return [m for _, _, m in self.schedule]

    @property
    def breakpoints(self):
        return [a for a, _, _ in self.schedule] + [self.horizon]

    def at(self, t):
        """Measure active at time t (right-continuous; t = T maps to the last piece)."""
        for a, b, m in self.schedule:
            if a <= t < b:
                return m
        if t == self.horizon:
            return self.schedule[-1][2]
        raise ValueError(f"time {t} outside [0, {self.horizon}]")

    def describe(self):
        return {"schedule": [{"t_start": a, "t_end": b, "measure": m.describe()}
                             for a, b, m in self.schedule]}


# ---------------------------------------------------- functional wrappers

def tail_mass(m: LevyMeasure, r):
    """nu({|y| >= r})."""
    if np.any(np.asarray(r) <= 0):
        raise ValueError("r must be positive")
    return m.tail_mass(r)


def truncated_moment(m: LevyMeasure, c: float, r, region: str):
    """int |y|^c nu(dy) over {|y| >= r} (outside, c < sigma) or {|y| < r} (inside, c > sigma)."""
    if np.any(np.asarray(r) <= 0):
        raise ValueError("r must be positive")
    return m.moment(c, r, region)


def cancellation_defect(m: LevyMeasure, r1: float, r2: float):
    """int_{r1 <= |y| <= r2} y nu(dy) as a length-d vector."""
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    return np.asarray(m.cancellation_defect(r1, r2), dtype=float)


def nondegeneracy_functional(m: LevyMeasure, xi):
    """int_{|xi.y| <= 1} |xi.y|^2 nu(dy); scalar for a single xi, array for rows."""
    arr = np.asarray(xi, dtype=float)
    rows = np.atleast_2d(arr) if arr.ndim else arr.reshape(1, 1)
    if m.dim == 1 and rows.shape[1] != 1:
        rows = rows.reshape(-1, 1)
    if np.any(np.linalg.norm(rows, axis=1) == 0):
        raise ValueError("xi must be nonzero")
    out = m.nondegeneracy(rows)
    return float(out[0]) if arr.ndim <= 1 and rows.shape[0] == 1 else out


# ------------------------------------------------------------- reports

@dataclass
class AssumptionReport:
    """Empirical reading of the sigma-stable-like assumptions on finite grids."""

    lambda_hat: float
    nondegen_hat: float
    cancellation_max: float
    sigma: float
    r_grid: np.ndarray = field(repr=False)
    xi_grid: np.ndarray = field(repr=False)
    upper_ok: bool = True
    nondegen_ok: bool = True
    cancellation_ok: bool = True
    argmin_xi: np.ndarray | None = field(default=None, repr=False)

    @property
    def passed(self):
        return self.upper_ok and self.nondegen_ok and self.cancellation_ok

    @property
    def upper_passed(self):
        """The weaker upper-bound assumption (no nondegeneracy)."""
        return self.upper_ok and self.cancellation_ok

    def lines(self):
        return [
            f"lambda_hat       = {self.lambda_hat!r}",
            f"nondegen_hat     = {self.nondegen_hat!r}",
            f"cancellation_max = {self.cancellation_max!r}" + ("" if self.sigma == 1 else " (sigma != 1, not required)"),
            f"upper_ok={self.upper_ok} nondegen_ok={self.nondegen_ok} cancellation_ok={self.cancellation_ok}",
            f"passed={self.passed}",
        ]


def lambda_sup(m: LevyMeasure, r_grid):
    """sup of r^sigma * tail_mass(r) over the grid and every atom radius.

    Between consecutive atom radii the tail is constant while r^sigma grows, so
    adding the atom radii makes the sup exact for every variant here.
    """
    pos, _ = m.atoms()
    rad = np.unique(np.linalg.norm(pos, axis=1)) if pos.shape[0] else np.zeros(0)
    rs = np.concatenate([np.asarray(r_grid, dtype=float), rad])
    vals = rs ** m.sigma * np.asarray(m.tail_mass(rs))
    return float(vals.max())


def _annuli(m, r_grid):
    r = np.asarray(r_grid, dtype=float)
    pairs = [(r[i], r[i + 1]) for i in range(len(r) - 1)] + [(r[0], r[-1])]
    pos, _ = m.atoms()
    if pos.shape[0]:
        for rho in np.unique(np.linalg.norm(pos, axis=1)):
            pairs.append((rho * (1 - 1e-9), rho * (1 + 1e-9)))
    return pairs


def check_assumptions(m, r_grid=None, xi_grid_=None) -> AssumptionReport:
    """Empirical Lambda, N_0 and cancellation defect; worst case over a schedule."""
    if isinstance(m, TimeDependentMeasure):
        reports = [check_assumptions(p, r_grid, xi_grid_) for p in m.pieces]
        worst = max(reports, key=lambda rep: rep.lambda_hat)
        low = min(reports, key=lambda rep: rep.nondegen_hat)
        canc = max(rep.cancellation_max for rep in reports)
        return AssumptionReport(
            lambda_hat=worst.lambda_hat, nondegen_hat=low.nondegen_hat, cancellation_max=canc,
            sigma=m.sigma, r_grid=worst.r_grid, xi_grid=worst.xi_grid,
            upper_ok=all(rep.upper_ok for rep in reports),
            nondegen_ok=all(rep.nondegen_ok for rep in reports),
            cancellation_ok=all(rep.cancellation_ok for rep in reports),
            argmin_xi=low.argmin_xi)
    r_grid = log_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    xg = xi_grid(m.dim) if xi_grid_ is None else np.atleast_2d(np.asarray(xi_grid_, dtype=float))
    if xg.shape[1] != m.dim:
        xg = xg.reshape(-1, m.dim)
    lam = lambda_sup(m, r_grid)
    nd = m.nondegeneracy(xg) / np.linalg.norm(xg, axis=1) ** m.sigma
    k = int(np.argmin(nd))
    canc = 0.0
    if m.sigma == 1:
        canc = max(float(np.linalg.norm(m.cancellation_defect(a, b))) for a, b in _annuli(m, r_grid))
    return AssumptionReport(
        lambda_hat=lam, nondegen_hat=float(nd[k]), cancellation_max=canc, sigma=m.sigma,
        r_grid=r_grid, xi_grid=xg, upper_ok=bool(np.isfinite(lam)),
        nondegen_ok=bool(nd[k] > 0), cancellation_ok=bool(canc < CANCELLATION_TOL),
        argmin_xi=xg[k])


@dataclass
class MomentReport:
    c_grid: np.ndarray
    empirical: np.ndarray  # sup_r moment * r^{sigma - c}, per c
    predicted: np.ndarray  # dyadic-summation constant, per c
    regions: list
    lambda_used: float

    @property
    def passed(self):
        return bool(np.all(np.isfinite(self.empirical)) and np.all(self.empirical <= self.predicted * (1 + 1e-12)))


def moment_constant(sigma, c, lam, region):
    """Constant from summing the tail bound over dyadic shells."""
    if region == "outside":
        return lam * 2.0 ** max(c, 0.0) / (1 - 2.0 ** (c - sigma))
    return lam * 2.0 ** sigma / (1 - 2.0 ** (sigma - c))


def check_moment_bounds(m: LevyMeasure, c_grid: Sequence[float], r_grid=None) -> MomentReport:
    """sup_r r^{sigma - c} * truncated moment, for each c (outside if c < sigma, inside if c > sigma)."""
    r_grid = log_grid(2.0 ** -8, 2.0 ** 8) if r_grid is None else np.asarray(r_grid, dtype=float)
    lam = max(1.0, lambda_sup(m, r_grid))
    emp, pred, regions = [], [], []
    for c in c_grid:
        if c == m.sigma:
            raise ValueError("c = sigma is excluded: both moments diverge")
        region = "outside" if c < m.sigma else "inside"
        vals = np.asarray(m.moment(c, r_grid, region)) * r_grid ** (m.sigma - c)
        emp.append(float(vals.max()))
        pred.append(moment_constant(m.sigma, c, lam, region))
        regions.append(region)
    return MomentReport(np.asarray(c_grid, dtype=float), np.array(emp), np.array(pred), regions, lam)
