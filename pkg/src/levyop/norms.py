"""Discrete (weighted, mixed) L_p norms, Bessel-potential norms and A_p constants of power weights."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridField, fractional_laplacian

__all__ = [
    "Weight", "lp_norm", "bessel_norm", "space_time_norm", "muckenhoupt_constant",
    "MuckenhouptResult", "power_weight_in_ap", "weight_integral",
]


@dataclass(frozen=True)
class Weight:
    """|x - center|^l (kind='power') or 1 (kind='constant').

    ``center`` defaults to pi for spatial weights (the middle of [0, 2pi)) and
    is a scalar shared by every coordinate; temporal weights are 1-d.
    """

    kind: str = "constant"
    l: float = 0.0
    axis: str = "spatial"
    center: float | None = None
    subcells: int = 4  # midpoint subdivision for d >= 2 spatial power weights

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise ValueError("weight kind must be 'constant' or 'power'")
        if self.axis not in ("spatial", "temporal"):
            raise ValueError("weight axis must be 'spatial' or 'temporal'")
        if self.kind == "power" and self.axis == "temporal" and not self.l > -1:
            raise ValueError("temporal power weight needs l > -1 to be integrable")

    @classmethod
    def power(cls, l, axis="spatial", center=None):
        return cls("power", float(l), axis, center)

    def c(self, default=math.pi):
        return default if self.center is None else self.center

    def __call__(self, x):
        if self.kind == "constant":
            return np.ones_like(np.asarray(x, dtype=float))
        return np.abs(np.asarray(x, dtype=float) - self.c()) ** self.l


def _power_antiderivative(x, c, l):
    y = x - c
    if l == -1:
        with np.errstate(divide="ignore"):
            return np.sign(y) * np.log(np.abs(y))
    return np.sign(y) * np.abs(y) ** (l + 1) / (l + 1)


def weight_integral(w: Weight | None, a, b, center=None):
    """int_a^b w(x) dx for arrays of endpoints (1-d, exact)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if w is None or w.kind == "constant":
        return b - a
    c = w.c(center if center is not None else math.pi)
    if w.l <= -1:
        hits = (a <= c) & (c <= b)
        with np.errstate(divide="ignore"):
            val = np.where(hits, np.inf, np.abs(_power_antiderivative(b, c, w.l) - _power_antiderivative(a, c, w.l)))
        return val
    return _power_antiderivative(b, c, w.l) - _power_antiderivative(a, c, w.l)


def _cell_weights(w: Weight | None, d, n):
    """int over each grid cell [x_j, x_j + h)^d of the spatial weight."""
    h = 2 * np.pi / n
    if w is None or w.kind == "constant":
        return np.full((n,) * d, h ** d)
    if w.axis != "spatial":
        raise ValueError("spatial norm needs a spatial weight")
    if not w.l > -d:
        raise ValueError(f"power weight |x|^{w.l} is not locally integrable in dimension {d}")
    x = GridField.axis_points(n)
    if d == 1:
        return weight_integral(w, x, x + h)
    s = w.subcells
    offs = (np.arange(s) + 0.5) * h / s
    sub = (x[:, None] + offs[None, :]).ravel()  # sub-midpoints along an axis
    grids = np.meshgrid(*([sub] * d), indexing="ij")
    r2 = sum((g - w.c()) ** 2 for g in grids)
    vals = r2 ** (w.l / 2) * (h / s) ** d
    for ax in range(d):
        vals = vals.reshape(vals.shape[:ax] + (n, s) + vals.shape[ax + 1:]).sum(axis=ax + 1)
    return vals


def _spatial_norm(values, p, w, d, n):
    a = np.abs(values)
    if p == np.inf:
        return float(a.max()) if a.size else 0.0
    cw = _cell_weights(w, d, n)
    return float(np.sum(a ** p * cw) ** (1.0 / p))


def _row_norms(rows, p, w, d, n):
    """Spatial norms of every leading-axis slice of ``rows``."""
    a = np.abs(rows).reshape(rows.shape[0], -1)
    if p == np.inf:
        return a.max(axis=1)
    cw = _cell_weights(w, d, n).ravel()
    return (a ** p @ cw) ** (1.0 / p)


def lp_norm(u, p=2.0, w: Weight | None = None, mixed=None):
    """Weighted discrete L_p norm of a GridField, or mixed L_q(w1 dt; L_{p,w}) of a Trajectory.

    ``mixed`` is ``(q, w1)`` for trajectories; node values are combined by the
    trapezoid rule in time.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if isinstance(u, GridField):
        return _spatial_norm(u.values, p, w, u.d, u.n)
    q, w1 = mixed if mixed is not None else (p, None)
    states = np.array([s.values for s in u.states])
    return space_time_norm(u.times, states[:-1], states[1:], p, q, w, w1)


def space_time_norm(times, left, right, p, q, space_weight=None, time_weight=None):
    """L_q(w1 dt; L_{p,w2}) norm from one-sided samples at both ends of every time cell."""
    times = np.asarray(times, dtype=float)
    d = left.ndim - 1
    n = left.shape[1]
    gl = _row_norms(left, p, space_weight, d, n)
    gr = _row_norms(right, p, space_weight, d, n)
    if q == np.inf:
        return float(max(gl.max(), gr.max()))
    if time_weight is None or time_weight.kind == "constant":
        tw = np.diff(times)
    else:
        tw = weight_integral(time_weight, times[:-1], times[1:], center=0.5 * times[-1])
    return float(np.sum(0.5 * (gl ** q + gr ** q) * tw) ** (1.0 / q))


def bessel_norm(u: GridField, sigma: float, p: float = 2.0, w: Weight | None = None):
    """|| (1 - Delta)^{sigma/2} u ||_p."""
    return lp_norm(fractional_laplacian(u, sigma, shifted=True), p, w)


# ------------------------------------------------------------- Muckenhoupt

def power_weight_in_ap(l, p, d=1):
    """Closed-form membership of |x|^l in A_p(R^d): -d < l < d(p - 1)."""
    return -d < l < d * (p - 1)


@dataclass
class MuckenhouptResult:
    constant: float
    diverges: bool
    worst_interval: tuple

    def __iter__(self):
        return iter((self.constant, self.diverges, self.worst_interval))


def _default_intervals(c, n=256):
    """Intervals (x0 - r, x0 + r) on a grid of radii and relative offsets (x0 - c)/r.

    For power weights the A_p ratio depends only on the relative offset, so the
    offset sweep is what matters; radii run from one grid cell to half the period.
    """
    h = 2 * np.pi / n
    radii = np.exp(np.linspace(math.log(h), math.log(np.pi), 9))
    theta = np.concatenate([np.linspace(0, 2, 161), np.linspace(2.1, 20, 60)])
    r = np.repeat(radii, theta.size)
    x0 = c + r * np.tile(theta, radii.size)
    return np.stack([x0 - r, x0 + r], axis=1)


def muckenhoupt_constant(w: Weight, p: float, intervals=None) -> MuckenhouptResult:
    """sup over intervals of avg(w) * avg(w^{1/(1-p)})^{p-1} in one dimension.

    Averages are computed from exact antiderivatives. An interval on which
    either average is infinite sets ``diverges``.
    """
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    c = w.c()
    iv = _default_intervals(c) if intervals is None else np.asarray(intervals, dtype=float)
    a, b = iv[:, 0], iv[:, 1]
    length = b - a
    if w.kind == "constant":
        k = 0
        return MuckenhouptResult(1.0, False, (float(a[k]), float(b[k])))
    dual = Weight("power", w.l / (1 - p), "spatial", c)
    with np.errstate(over="ignore", invalid="ignore"):
        avg = weight_integral(w, a, b, c) / length
        avg_dual = weight_integral(dual, a, b, c) / length
        vals = avg * avg_dual ** (p - 1)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.argmax(bad))
        return MuckenhouptResult(np.inf, True, (float(a[k]), float(b[k])))
    k = int(np.argmax(vals))
    return MuckenhouptResult(float(vals[k]), False, (float(a[k]), float(b[k])))
