"""Tail operator, measure-weighted maximal operator and parabolic maximal functions (d = 1 grids).

Grid points are x_i = i h on [0, 2pi). A ball B_R(c) holds the grid points
with |x_j - c| < R (periodic, possibly wrapping several times), and local
integrals are Riemann sums h * sum_j. Atoms act exactly. Power-density parts
of a measure are folded into one period of effective atoms. This is exact
because the ball sum around x_i + s is piecewise constant in s, with
breakpoints that do not depend on i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grid import GridField
from .measure import (
    AxisStable, LevyMeasure, Polar, RadialDensity, Scaled, Sum, lambda_sup, log_grid,
)

__all__ = [
    "TailOperatorSpec", "tail_operator", "maximal_T", "verify_tail_vs_maximal",
    "maximal_boundedness", "parabolic_maximal", "temporal_maximal", "default_r_grid",
    "effective_atoms", "surrogate", "TailMaximalReport", "BoundednessReport",
]


def default_r_grid(n=None):
    """Dyadic radii 2pi 2^k, k = -8..3; with ``n`` given, radii below one grid cell are dropped.

    A ball narrower than a cell holds at most one grid point, and its Riemann
    sum overstates the local integral by about h / 2R.
    """
    r = 2 * np.pi * np.exp2(np.arange(-8, 4, dtype=float))
    return r if n is None else r[r >= 2 * np.pi / n * (1 - 1e-12)]


def surrogate(m: LevyMeasure) -> LevyMeasure:
    """nu + |y|^{-d-sigma} dy."""
    return Sum((m, RadialDensity(m.sigma, m.dim, 1.0)))


@dataclass(frozen=True)
class TailOperatorSpec:
    measure: LevyMeasure
    p: float
    kappa: float
    R: float

    def __post_init__(self):
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.measure.dim != 1:
            raise ValueError("maximal operators are implemented on d = 1 grids")


# ------------------------------------------------------ effective atoms

def _density_sides(m):
    """List of (coefficient, sign) for half-line densities coef * |y|^{-1-sigma} on sign * (0, inf)."""
    if isinstance(m, (RadialDensity, AxisStable)):
        return [(m.c, 1.0), (m.c, -1.0)]
    if isinstance(m, Polar):
        return [(w, float(np.sign(th[0]))) for th, w in zip(m.directions, m.weights) if w > 0]
    if isinstance(m, Sum):
        return [s for p in m.parts for s in _density_sides(p)]
    if isinstance(m, Scaled):
        return [(m.factor * c, s) for c, s in _density_sides(m.inner)]
    return []


def _folded_masses(a, b, sigma, period, terms=128):
    """sum_{k >= 0} int_{a + k P}^{b + k P} y^{-1-sigma} dy for arrays 0 < a < b.

    The first ``terms`` periods are summed directly; the rest by Euler-Maclaurin.
    """
    k = np.arange(terms, dtype=float)[None, :]
    aa = a[:, None] + k * period
    bb = b[:, None] + k * period
    head = ((aa ** -sigma - bb ** -sigma) / sigma).sum(axis=1)
    A = a + terms * period
    B = b + terms * period
    f = (A ** -sigma - B ** -sigma) / sigma
    fp = -period * (A ** (-sigma - 1) - B ** (-sigma - 1))
    if sigma == 1:
        integral = np.log(B / A) / period
    else:
        integral = (B ** (1 - sigma) - A ** (1 - sigma)) / (period * (1 - sigma)) / sigma
    return head + integral + 0.5 * f - fp / 12


def effective_atoms(m: LevyMeasure, r_min: float, n: int, rho_cells: float):
    """(shifts in cells, weights) representing nu restricted to |y| >= r_min on the periodic grid.

    ``rho_cells`` is the ball radius in cells; it fixes where the ball sum of
    a density piece changes, so the folding is exact for that radius.
    """
    h = 2 * np.pi / n
    pos, w = m.atoms()
    shifts, weights = [], []
    if pos.shape[0]:
        keep = np.abs(pos[:, 0]) >= r_min
        shifts.append(pos[keep, 0] / h)
        weights.append(w[keep])
    sides = _density_sides(m)
    if sides:
        s0 = r_min / h
        frac = rho_cells - math.floor(rho_cells)
        cand = np.concatenate([np.arange(math.floor(s0) - 1, math.floor(s0) + n + 2) + frac,
                               np.arange(math.floor(s0) - 1, math.floor(s0) + n + 2) - frac])
        cand = np.unique(cand[(cand > s0) & (cand < s0 + n)])
        edges = np.concatenate([[s0], cand, [s0 + n]])
        a, b = edges[:-1] * h, edges[1:] * h
        mass = _folded_masses(a, b, m.sigma, 2 * np.pi)
        mid = 0.5 * (edges[:-1] + edges[1:])
        for coef, sign in sides:
            shifts.append(sign * mid)
            weights.append(coef * mass)
    if not shifts:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(shifts), np.concatenate(weights)


# ------------------------------------------------------------ operators

def _values_1d(u):
    v = u.values if isinstance(u, GridField) else np.asarray(u, dtype=float)
    if v.ndim != 1:
        raise ValueError("maximal operators are implemented on d = 1 grids")
    return v


def tail_operator(u, spec: TailOperatorSpec, x=None):
    """kappa^sigma R^{sigma - 1/p} int_{|y| >= kappa R} ||u||_{L_p(B_R(x + y))} nu(dy).

    Returns the whole field when ``x`` is None, else the value at grid index ``x``.
    """
    v = _values_1d(u)
    n = v.shape[0]
    h = 2 * np.pi / n
    m, p, kap, R = spec.measure, spec.p, spec.kappa, spec.R
    rho = R / h
    shifts, w = effective_atoms(m, kap * R, n, rho)
    prefix = kernels.periodic_prefix(np.abs(v) ** p)
    vals = kernels.tail_ball_average(prefix, shifts, w, rho, 1.0 / p)
    out = kap ** m.sigma * R ** (m.sigma - 1.0 / p) * h ** (1.0 / p) * vals
    return out if x is None else float(out[x])


def _maximal_per_R(v, m, kappa, r_grid):
    n = v.shape[0]
    h = 2 * np.pi / n
    prefix = kernels.periodic_prefix(np.abs(v))
    rows = []
    for R in r_grid:
        rho = R / h
        shifts, w = effective_atoms(m, kappa * R, n, rho)
        vals = kernels.tail_ball_average(prefix, shifts, w, rho, 1.0)
        rows.append(kappa ** m.sigma * R ** (m.sigma - 1) * h * vals)
    return np.array(rows)


def maximal_T(u, m: LevyMeasure, kappa: float, r_grid=None) -> GridField:
    """sup_R kappa^sigma R^{sigma - 1} int_{|y| >= kappa R} int_{B_R(x + y)} |u| nu(dy)."""
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    v = _values_1d(u)
    r_grid = default_r_grid(v.shape[0]) if r_grid is None else np.asarray(r_grid, dtype=float)
    return GridField(_maximal_per_R(v, m, kappa, r_grid).max(axis=0))


@dataclass
class TailMaximalReport:
    n_empirical: float  # max over x, R of T^R / (T_kappa |u|^p)^{1/p}
    n_bound: float  # max(1, Lambda)^{1/p'}
    holder_ok: bool  # per-R Hoelder factor respected everywhere
    p: float
    kappa: float

    @property
    def passed(self):
        return bool(np.isfinite(self.n_empirical) and self.holder_ok
                    and self.n_empirical <= self.n_bound * (1 + 1e-12))


def verify_tail_vs_maximal(u, m: LevyMeasure, kappa: float, p: float, r_grid=None) -> TailMaximalReport:
    """Pointwise check of tail(u) <= N (T_kappa |u|^p)^{1/p} over every R of the grid."""
    v = _values_1d(u)
    r_grid = default_r_grid(v.shape[0]) if r_grid is None else np.asarray(r_grid, dtype=float)
    big_t = _maximal_per_R(np.abs(v) ** p, m, kappa, r_grid).max(axis=0) ** (1.0 / p)
    pp = p / (p - 1)
    worst, holder = 0.0, True
    for R in r_grid:
        tail = tail_operator(v, TailOperatorSpec(m, p, kappa, R))
        factor = ((kappa * R) ** m.sigma * m.tail_mass(kappa * R)) ** (1.0 / pp)
        mask = big_t > 0
        if np.any(tail[~mask] > 0):
            worst = np.inf
            continue
        if np.any(mask):
            ratio = tail[mask] / big_t[mask]
            worst = max(worst, float(ratio.max()))
            holder &= bool(np.all(ratio <= factor * (1 + 1e-12) + 1e-300))
    lam = max(1.0, lambda_sup(m, log_grid()))
    return TailMaximalReport(worst, lam ** (1.0 / pp), holder, p, kappa)


@dataclass
class BoundednessReport:
    kappas: np.ndarray
    ratios: np.ndarray  # (len(kappas), ensemble size)
    slope: float  # least-squares slope of log(max ratio) vs log kappa
    p: float
    slope_tol: float = 0.2
    extra: dict = field(default_factory=dict)

    @property
    def max_ratio(self):
        return float(self.ratios.max())

    @property
    def passed(self):
        return bool(np.all(np.isfinite(self.ratios)) and abs(self.slope) <= self.slope_tol)


def _lp(v, p):
    h = 2 * np.pi / v.shape[0]
    return float((h * np.sum(np.abs(v) ** p)) ** (1.0 / p))


def maximal_boundedness(m: LevyMeasure, p: float, kappas, ensemble, r_grid=None) -> BoundednessReport:
    """||T_kappa u||_p / ||u||_p over an ensemble of fields, for each kappa."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    kappas = np.asarray(kappas, dtype=float)
    ratios = np.zeros((kappas.size, len(ensemble)))
    for a, kap in enumerate(kappas):
        for b, u in enumerate(ensemble):
            v = _values_1d(u)
            ratios[a, b] = _lp(maximal_T(v, m, kap, r_grid).values, p) / _lp(v, p)
    top = ratios.max(axis=1)
    slope = float(np.polyfit(np.log(kappas), np.log(top), 1)[0]) if kappas.size > 1 else 0.0
    return BoundednessReport(kappas, ratios, slope, p)


# ------------------------------------------------ parabolic maximal functions

def _dyadic_halfwidths(nx):
    ks = [0]
    k = 1
    while 2 * k + 1 <= nx:
        ks.append(k)
        k *= 2
    return ks


def parabolic_maximal(g, sigma: float, dt: float, dx: float, halfwidths=None):
    """Sup of |g| averages over discrete cylinders (t - R^sigma, t] x B_R containing each sample.

    ``g`` has shape (nt, nx); space is periodic, time is not. A cylinder has
    spatial half-width k cells (R = (k + 1/2) dx) and L = max(1, ceil(R^sigma / dt))
    time cells; the k run over a dyadic family.
    """
    a = np.abs(np.asarray(g, dtype=float))
    nt, nx = a.shape
    ks = _dyadic_halfwidths(nx) if halfwidths is None else list(halfwidths)
    ct = np.vstack([np.zeros((1, nx)), np.cumsum(a, axis=0)])  # ct[s] = sum of rows < s
    out = np.full(a.shape, -np.inf)
    for k in ks:
        R = (k + 0.5) * dx
        L = max(1, math.ceil(R ** sigma / dt - 1e-12))
        if L > nt:
            continue
        w = 2 * k + 1
        rows = ct[L:] - ct[:-L]  # sum over time window [s, s + L - 1], s = 0..nt-L
        idx = (np.arange(nx)[:, None] + np.arange(-k, k + 1)[None, :]) % nx
        box = rows[:, idx].sum(axis=-1) / (L * w)
        padded = np.vstack([np.full((L - 1, nx), -np.inf), box])  # row e = window start e - L + 1
        if padded.shape[0] < nt + L - 1:
            padded = np.vstack([padded, np.full((nt + L - 1 - padded.shape[0], nx), -np.inf)])
        out = np.maximum(out, kernels.window_max(padded[:nt + L - 1], L, k)[:nt])
    return out


def temporal_maximal(h, sigma=None):
    """sup over backward windows [t - r, t] of the mean of |h| (all window lengths)."""
    a = np.abs(np.asarray(h, dtype=float))
    c = np.concatenate([[0.0], np.cumsum(a)])
    nt = a.shape[0]
    out = np.empty(nt)
    for i in range(nt):
        L = np.arange(1, i + 2)
        out[i] = np.max((c[i + 1] - c[i + 1 - L]) / L)
    return out
