"""Hot inner loops, each in two flavours.

Every kernel ``foo`` exists as ``foo_numba`` (compiled loops) and ``foo_numpy``
(vectorized numpy). The public name ``foo`` is bound to one of them at import
time according to :data:`levyop._accel.USE_NUMBA`. Tests exercise both.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

_CHUNK = 1 << 20


# ---------------------------------------------------------------- trig shift

def dirichlet_row(n, shift):
    """Periodic trigonometric-interpolation weights for a shift of ``shift`` cells.

    ``row[m]`` multiplies the sample ``m`` cells behind the evaluation point, so
    ``u(x_i + shift*h) = sum_j u_j row[(i - j) % n]``.
    """
    m = np.arange(n, dtype=np.float64)
    theta = 2.0 * np.pi * (m + shift) / n
    half = 0.5 * theta
    out = np.empty(n)
    s = np.sin(n * half)
    t = np.tan(half)
    small = np.abs(np.sin(half)) < 1e-15
    with np.errstate(divide="ignore", invalid="ignore"):
        if n % 2 == 0:
            out[:] = s / (n * t)
        else:
            out[:] = s / (n * np.sin(half))
    out[small] = 1.0
    return out


def trig_shift_numpy(lines, shift):
    """Evaluate each row of ``lines`` (periodic samples) at ``x + shift*h``."""
    n = lines.shape[-1]
    r = round(shift)
    if abs(shift - r) < 1e-12:
        return np.roll(lines, -int(r), axis=-1)
    row = dirichlet_row(n, shift)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return lines @ row[idx].T


@njit
def _trig_shift_loops(lines, row, out):
    nr, n = lines.shape
    for r in range(nr):
        for i in range(n):
            acc = 0.0
            for j in range(i + 1):  # split at the wrap so the loops stay branch-free
                acc += lines[r, j] * row[i - j]
            for j in range(i + 1, n):
                acc += lines[r, j] * row[i - j + n]
            out[r, i] = acc


def trig_shift_numba(lines, shift):
    n = lines.shape[-1]
    r = round(shift)
    if abs(shift - r) < 1e-12:
        return np.roll(lines, -int(r), axis=-1)
    row = dirichlet_row(n, shift)
    lines2 = np.ascontiguousarray(lines, dtype=np.float64).reshape(-1, n)
    out = np.empty_like(lines2)
    _trig_shift_loops(lines2, row, out)
    return out.reshape(lines.shape)


# ----------------------------------------------------------- atomic symbols

def atom_symbol_numpy(xi, atoms, weights, drift):
    """sum_a w_a (exp(i xi.y_a) - 1) - i xi.drift for each row of ``xi``."""
    xi = np.atleast_2d(xi)
    re = np.zeros(xi.shape[0])
    im = np.zeros(xi.shape[0])
    step = max(1, _CHUNK // max(1, atoms.shape[0]))
    for s in range(0, xi.shape[0], step):
        ph = xi[s:s + step] @ atoms.T
        half = np.sin(0.5 * ph)
        re[s:s + step] = -2.0 * (half * half) @ weights
        im[s:s + step] = np.sin(ph) @ weights
    im -= xi @ drift
    return re + 1j * im


@njit
def _atom_symbol_loops(xi, atoms, weights, drift, re, im):
    npts, d = xi.shape
    na = atoms.shape[0]
    for p in range(npts):
        sr = 0.0
        si = 0.0
        for a in range(na):
            ph = 0.0
            for k in range(d):
                ph += xi[p, k] * atoms[a, k]
            h = math.sin(0.5 * ph)
            sr -= 2.0 * weights[a] * h * h
            si += weights[a] * math.sin(ph)
        for k in range(d):
            si -= xi[p, k] * drift[k]
        re[p] = sr
        im[p] = si


def atom_symbol_numba(xi, atoms, weights, drift):
    xi = np.ascontiguousarray(np.atleast_2d(xi), dtype=np.float64)
    re = np.empty(xi.shape[0])
    im = np.empty(xi.shape[0])
    _atom_symbol_loops(xi, np.ascontiguousarray(atoms, dtype=np.float64),
                       np.ascontiguousarray(weights, dtype=np.float64),
                       np.ascontiguousarray(drift, dtype=np.float64), re, im)
    return re + 1j * im


# ----------------------------------------------------------- 1-d ball sums

def periodic_prefix(a):
    out = np.zeros(a.shape[0] + 1)
    np.cumsum(a, out=out[1:])
    return out


def ball_sums_numpy(prefix, centers, rho):
    """Sums of a periodic sequence over the open index balls ``|i - c| < rho``.

    ``prefix`` is :func:`periodic_prefix` of the sequence; ``centers`` is any
    float array in index units. Balls may wrap the period several times.
    """
    n = prefix.shape[0] - 1
    total = prefix[-1]
    lo = np.floor(centers - rho).astype(np.int64) + 1
    hi = np.ceil(centers + rho).astype(np.int64)  # exclusive
    hi = np.maximum(hi, lo)

    def cum(k):
        q, r = np.divmod(k, n)
        return q * total + prefix[r]

    return cum(hi) - cum(lo)


@njit
def _ball_sums_loops(prefix, centers, rho, out):
    n = prefix.shape[0] - 1
    total = prefix[n]
    for p in range(centers.shape[0]):
        lo = int(math.floor(centers[p] - rho)) + 1
        hi = int(math.ceil(centers[p] + rho))
        if hi < lo:
            hi = lo
        qh = hi // n
        qlo = lo // n
        out[p] = (qh * total + prefix[hi - qh * n]) - (qlo * total + prefix[lo - qlo * n])


def ball_sums_numba(prefix, centers, rho):
    c = np.ascontiguousarray(centers, dtype=np.float64).ravel()
    out = np.empty(c.shape[0])
    _ball_sums_loops(prefix, c, float(rho), out)
    return out.reshape(np.shape(centers))


# ------------------------------------------------- measure-weighted averages

def tail_ball_average_numpy(prefix, shifts, weights, rho, power):
    """For every grid point i: sum_a w_a * (ball sum around i + shift_a) ** power."""
    n = prefix.shape[0] - 1
    if shifts.shape[0] == 0:
        return np.zeros(n)
    centers = np.arange(n, dtype=np.float64)[:, None] + shifts[None, :]
    bs = ball_sums_numpy(prefix, centers, rho)
    if power != 1.0:
        bs = np.maximum(bs, 0.0) ** power
    return bs @ weights


@njit
def _tail_ball_average_loops(prefix, shifts, weights, rho, power, out):
    n = prefix.shape[0] - 1
    total = prefix[n]
    for i in range(n):
        acc = 0.0
        for a in range(shifts.shape[0]):
            c = i + shifts[a]
            lo = int(math.floor(c - rho)) + 1
            hi = int(math.ceil(c + rho))
            if hi < lo:
                hi = lo
            qh = hi // n
            qlo = lo // n
            s = (qh * total + prefix[hi - qh * n]) - (qlo * total + prefix[lo - qlo * n])
            if power != 1.0:
                if s < 0.0:
                    s = 0.0
                s = s ** power
            acc += weights[a] * s
        out[i] = acc


def tail_ball_average_numba(prefix, shifts, weights, rho, power):
    n = prefix.shape[0] - 1
    out = np.empty(n)
    _tail_ball_average_loops(prefix, np.ascontiguousarray(shifts, dtype=np.float64),
                             np.ascontiguousarray(weights, dtype=np.float64),
                             float(rho), float(power), out)
    return out


# ------------------------------------------------------- trig evaluation

def trig_eval_numpy(coef, freqs, points):
    """Real part of sum_k coef_k exp(i freqs_k . x) at each row of ``points``."""
    points = np.atleast_2d(points)
    out = np.empty(points.shape[0])
    step = max(1, _CHUNK // max(1, freqs.shape[0]))
    for s in range(0, points.shape[0], step):
        ph = points[s:s + step] @ freqs.T
        out[s:s + step] = np.cos(ph) @ coef.real - np.sin(ph) @ coef.imag
    return out


@njit
def _trig_eval_loops(cr, ci, freqs, points, out):
    npts, d = points.shape
    for p in range(npts):
        acc = 0.0
        for k in range(freqs.shape[0]):
            ph = 0.0
            for q in range(d):
                ph += freqs[k, q] * points[p, q]
            acc += cr[k] * math.cos(ph) - ci[k] * math.sin(ph)
        out[p] = acc


def trig_eval_numba(coef, freqs, points):
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    out = np.empty(points.shape[0])
    _trig_eval_loops(np.ascontiguousarray(coef.real), np.ascontiguousarray(coef.imag),
                     np.ascontiguousarray(freqs, dtype=np.float64), points, out)
    return out


# ------------------------------------------------------ sliding window max

def window_max_numpy(a, lt, hx):
    """out[i, j] = max a[e, c] over e in [i, i+lt-1] and c in [j-hx, j+hx] (periodic in c).

    Rows of ``a`` past the end count as -inf. ``a`` has shape (nt, nx).
    """
    nt, nx = a.shape
    pad = np.full((nt + lt - 1, nx), -np.inf)
    pad[:nt] = a
    tmax = np.lib.stride_tricks.sliding_window_view(pad, lt, axis=0).max(axis=-1)
    if hx == 0:
        return tmax
    w = min(2 * hx + 1, nx)
    idx = (np.arange(nx)[:, None] + np.arange(-hx, -hx + w)[None, :]) % nx
    return tmax[:, idx].max(axis=-1)


@njit
def _window_max_loops(a, lt, hx, out):
    nt, nx = a.shape
    w = 2 * hx + 1
    if w > nx:
        w = nx
    tmax = np.empty(nx)
    for i in range(nt):  # the rectangle max separates: time first, then space
        for c in range(nx):
            best = -np.inf
            for e in range(i, min(i + lt, nt)):
                if a[e, c] > best:
                    best = a[e, c]
            tmax[c] = best
        for j in range(nx):
            best = -np.inf
            for q in range(w):
                c = j - hx + q
                c = c % nx
                if tmax[c] > best:
                    best = tmax[c]
            out[i, j] = best


def window_max_numba(a, lt, hx):
    out = np.empty(a.shape)
    _window_max_loops(np.ascontiguousarray(a, dtype=np.float64), int(lt), int(hx), out)
    return out


if USE_NUMBA:
    trig_shift = trig_shift_numba
    atom_symbol = atom_symbol_numba
    ball_sums = ball_sums_numba
    tail_ball_average = tail_ball_average_numba
    trig_eval = trig_eval_numba
    window_max = window_max_numba
else:
    trig_shift = trig_shift_numpy
    atom_symbol = atom_symbol_numpy
    ball_sums = ball_sums_numpy
    tail_ball_average = tail_ball_average_numpy
    trig_eval = trig_eval_numpy
    window_max = window_max_numpy

IMPLEMENTATIONS = {
    "trig_shift": (trig_shift_numpy, trig_shift_numba),
    "atom_symbol": (atom_symbol_numpy, atom_symbol_numba),
    "ball_sums": (ball_sums_numpy, ball_sums_numba),
    "tail_ball_average": (tail_ball_average_numpy, tail_ball_average_numba),
    "trig_eval": (trig_eval_numpy, trig_eval_numba),
    "window_max": (window_max_numpy, window_max_numba),
}
