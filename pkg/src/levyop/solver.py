"""Exact per-mode solver for du/dt = L_t u - lambda u + f, u(0) = 0, on the periodic grid.

Measures and forcing are piecewise constant in time, so each Fourier mode
obeys a scalar linear ODE with constant coefficients on every step and is
advanced by its exact exponential formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import FrequencyLattice, GridField, _lattice_multiplier, random_bandlimited
from .measure import LevyMeasure, TimeDependentMeasure, check_assumptions
from .symbol import Symbol

__all__ = [
    "PiecewiseForcing", "EvolutionProblem", "Trajectory", "solve", "residual",
    "apriori_ratio", "apriori_ratio_table", "plancherel_constant", "steps_for_resolution", "phi1", "comparison_multiplier",
]

SERIES_THRESHOLD = 1e-6
EXACT_SMALL = 0.5  # below this |z| dt the time integrals go through Gauss-Legendre


def _expm1(z):
    """exp(z) - 1 for complex arrays without cancellation."""
    x, y = z.real, z.imag
    s = np.sin(0.5 * y)
    return np.expm1(x) * np.cos(y) - 2 * s * s + 1j * np.exp(x) * np.sin(y)


def phi1(z):
    """(e^z - 1)/z, with the 3-term series near z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < SERIES_THRESHOLD
    out = np.empty_like(z)
    zs = z[small]
    out[small] = 1 + zs / 2 + zs * zs / 6
    zb = z[~small]
    out[~small] = _expm1(zb) / zb
    return out


@dataclass
class PiecewiseForcing:
    """f(t, x) = fields[k](x) for t in [times[k], times[k+1])."""

    times: np.ndarray
    fields: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("forcing mesh must start at 0 and increase strictly")
        if len(self.fields) != len(self.times) - 1:
            raise ValueError("need one forcing field per mesh interval")
        shapes = {f.values.shape for f in self.fields}
        if len(shapes) != 1:
            raise ValueError("forcing fields must share a grid")

    @classmethod
    def constant(cls, f: GridField, horizon: float, pieces: int = 1):
        return cls(np.linspace(0.0, horizon, pieces + 1), [f] * pieces)

    @classmethod
    def random(cls, d, n, times, kmax=None, rng=None):
        rng = np.random.default_rng(rng)
        return cls(times, [random_bandlimited(d, n, kmax, rng) for _ in range(len(times) - 1)])

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def d(self):
        return self.fields[0].d

    @property
    def n(self):
        return self.fields[0].n

    def index(self, t):
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(k, 0), len(self.fields) - 1)


@dataclass
class EvolutionProblem:
    measure: object  # TimeDependentMeasure or LevyMeasure
    lam: float
    forcing: PiecewiseForcing
    steps_per_interval: int = 1
    validate: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("damping lambda must be nonnegative")
        if isinstance(self.measure, LevyMeasure):
            self.measure = TimeDependentMeasure.constant(self.measure, self.forcing.horizon)
        if not math.isclose(self.measure.horizon, self.forcing.horizon, rel_tol=1e-12):
            raise ValueError("measure schedule and forcing mesh end at different times")
        for b in self.measure.breakpoints:
            if not np.any(np.isclose(self.forcing.times, b, rtol=0, atol=1e-12 * self.horizon)):
                raise ValueError(f"forcing mesh does not refine the measure schedule (breakpoint {b})")
        if self.measure.dim != self.forcing.d:
            raise ValueError("measure and forcing dimensions differ")
        if self.steps_per_interval < 1:
            raise ValueError("steps_per_interval must be >= 1")

    @property
    def horizon(self):
        return self.forcing.horizon

    @property
    def sigma(self):
        return self.measure.sigma

    @property
    def lattice(self):
        return FrequencyLattice(self.forcing.d, self.forcing.n)

    def nodes(self):
        t = self.forcing.times
        s = self.steps_per_interval
        sub = [t[k] + (t[k + 1] - t[k]) * np.arange(s) / s for k in range(len(t) - 1)]
        return np.concatenate(sub + [t[-1:]])


class _StepData:
    """Lattice symbols per distinct schedule piece and forcing spectra per mesh interval."""

    def __init__(self, p: EvolutionProblem):
        self.p = p
        lat = p.lattice
        self.lat = lat
        self.pieces = []
        self.z = []
        for m in p.measure.pieces:
            for i, q in enumerate(self.pieces):
                if q is m or q == m:
                    break
            else:
                self.pieces.append(m)
                mult = _lattice_multiplier(Symbol(m), lat)
                self.z.append(mult - p.lam)
        self.f_hat = [f.spectrum.ravel() for f in p.forcing.fields]

    def piece_index(self, t):
        m = self.p.measure.at(t)
        for i, q in enumerate(self.pieces):
            if q is m or q == m:
                return i
        raise KeyError("measure piece not found")

    def at(self, t_mid):
        """(z, f_hat) active at time t_mid (use an interior point of a step)."""
        return self.z[self.piece_index(t_mid)], self.f_hat[self.p.forcing.index(t_mid)]


@dataclass
class Trajectory:
    """Spectra of u at the nodes; ``dudt_hat`` holds left limits (right limit at t = 0)."""

    times: np.ndarray
    u_hat: np.ndarray  # (K+1, N)
    d: int
    n: int
    dudt_hat: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def states(self):
        return [self.state(k) for k in range(len(self.times))]

    def state(self, k):
        return GridField.from_spectrum(self.u_hat[k].reshape((self.n,) * self.d))

    @classmethod
    def from_states(cls, times, states):
        u_hat = np.stack([s.spectrum.ravel() for s in states])
        return cls(np.asarray(times, dtype=float), u_hat, states[0].d, states[0].n)

    def perturbed(self, scale, rng=None):
        rng = np.random.default_rng(rng)
        states = [GridField(s.values + scale * rng.standard_normal(s.values.shape)) for s in self.states]
        return Trajectory.from_states(self.times, states)

    def time_derivative(self):
        if self.dudt_hat is not None:
            return self.dudt_hat
        dt = np.diff(self.times)[:, None]
        back = np.diff(self.u_hat, axis=0) / dt
        return np.concatenate([back[:1], back])


def solve(p: EvolutionProblem) -> Trajectory:
    """Exact per-mode propagation across every substep of the forcing mesh."""
    if p.validate:
        for m in p.measure.pieces:
            rep = check_assumptions(m)
            if not rep.passed:
                raise ValueError("rejected problem: a schedule piece fails the assumption check\n"
                                 + "\n".join(rep.lines()))
    data = _StepData(p)
    t = p.nodes()
    N = data.lat.points.shape[0]
    u = np.zeros((len(t), N), dtype=complex)
    du = np.zeros((len(t), N), dtype=complex)
    steps = _step_arrays(Trajectory(t, u, p.forcing.d, p.forcing.n), data)
    e, ph = steps.propagators
    z, f = steps.z, steps.f
    du[0] = f[0]
    for k in range(len(t) - 1):
        u[k + 1] = e[k] * u[k] + ph[k] * f[k]
    du[1:] = e * (z * u[:-1] + f)
    return Trajectory(t, u, p.forcing.d, p.forcing.n, du,
                      meta={"lambda": p.lam, "sigma": p.sigma, "horizon": p.horizon})


def _parseval(lat, spec_rows):
    """Discrete L2 norms of fields given by rows of unnormalized spectra."""
    N = lat.points.shape[0]
    h = 2 * np.pi / lat.n
    return np.sqrt(h ** lat.d / N * np.sum(np.abs(spec_rows) ** 2, axis=-1))


def residual(traj: Trajectory, p: EvolutionProblem) -> float:
    """max over nodes of ||du/dt - L u + lambda u - f||_2, operator taken from the step ending at the node."""
    data = _StepData(p)
    steps = _step_arrays(traj, data)
    z = np.concatenate([steps.z[:1], steps.z])
    f = np.concatenate([steps.f[:1], steps.f])
    r = traj.time_derivative() - (z * traj.u_hat + f)
    return float(_parseval(data.lat, r).max())


# --------------------------------------------------------------- norms

def comparison_multiplier(comparison, sigma, lat):
    """Lattice multiplier of the comparison operator (absolute value is all that matters at p = 2)."""
    xi = lat.points
    if comparison == "fractional":
        return np.linalg.norm(xi, axis=1) ** sigma + 0j
    if comparison == "gradient":
        return np.linalg.norm(np.where(lat.nyquist[:, None], 0.0, xi), axis=1) + 0j
    if isinstance(comparison, LevyMeasure):
        rep = check_assumptions(comparison)
        if not rep.upper_passed:
            raise ValueError("comparison operator fails the upper-bound assumption")
        return _lattice_multiplier(Symbol(comparison), lat)
    if callable(comparison):
        return np.asarray(comparison(xi), dtype=complex)
    raise ValueError(f"unknown comparison operator {comparison!r}")


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _exact_l2_squared(alpha, beta, z, dt):
    """int_0^dt |alpha e^{zs} + beta (e^{zs} - 1)/z|^2 ds elementwise (dt broadcasts)."""
    z, alpha, beta = np.broadcast_arrays(z, alpha, beta)
    dt = np.broadcast_to(dt, z.shape)
    a = z.real
    zdt = z * dt
    small = np.abs(zdt) < EXACT_SMALL
    out = np.zeros(z.shape)
    big = ~small
    if np.any(big):
        zb, ab, al, be, db = z[big], a[big], alpha[big], beta[big], dt[big]
        p2a = phi1(2 * ab * db).real
        pz = phi1(zb * db)
        i_ee = db * p2a
        i_ef = db * (p2a - pz) / np.conj(zb)
        i_ff = db / np.abs(zb) ** 2 * (p2a - 2 * pz.real + 1)
        out[big] = (np.abs(al) ** 2 * i_ee + 2 * (al * np.conj(be) * i_ef).real
                    + np.abs(be) ** 2 * i_ff)
    if np.any(small):
        ds = dt[small][:, None]
        s = 0.5 * ds * (_GL_X + 1)
        zs = z[small][:, None] * s
        e = np.exp(zs)
        fcoef = s * phi1(zs)
        g = alpha[small][:, None] * e + beta[small][:, None] * fcoef
        out[small] = np.sum(np.abs(g) ** 2 * (0.5 * ds * _GL_W), axis=1)
    return out


def _quantity(kind, uk, z, f, cmult):
    """(alpha, beta) with quantity(s) = alpha e^{zs} + beta (e^{zs}-1)/z on a step starting at u_k."""
    if kind == "u":
        return uk, f
    if kind == "dt":
        return z * uk + f, np.zeros_like(uk)
    if kind == "op":
        return cmult * uk, cmult * f
    if kind == "f":
        return f, -z * f
    raise ValueError(kind)


class _Steps:
    """Per-step (z, f_hat, dt) stacked over steps, shapes (K, N), (K, N), (K, 1).

    ``propagators`` gives (e^{z dt}, dt phi1(z dt)), evaluated once per
    distinct (symbol, step length) pair since substeps repeat them.
    """

    def __init__(self, z_rows, zi, f, dt):
        self._z_rows = z_rows
        self.zi = zi
        self.z = z_rows[zi]
        self.f = f
        self.dt = dt
        self._prop = None

    def __iter__(self):
        return iter((self.z, self.f, self.dt))

    @property
    def propagators(self):
        if self._prop is None:
            scale = max(float(self.dt.max()), 1e-300)
            key = np.stack([self.zi, np.round(self.dt[:, 0] / scale * 1e12)], axis=1)
            uniq, inv = np.unique(key, axis=0, return_inverse=True)
            first = np.zeros(len(uniq), dtype=np.int64)
            first[inv[::-1]] = np.arange(len(inv))[::-1]
            zdt = self._z_rows[self.zi[first]] * self.dt[first]
            e = np.exp(zdt)
            ph = self.dt[first] * phi1(zdt)
            self._prop = (e[inv.ravel()], ph[inv.ravel()])
        return self._prop


def _step_arrays(traj, data):
    t = traj.times
    mids = 0.5 * (t[:-1] + t[1:])
    zi = np.array([data.piece_index(tm) for tm in mids])
    fi = np.array([data.p.forcing.index(tm) for tm in mids])
    return _Steps(np.stack(data.z), zi, np.stack(data.f_hat)[fi], np.diff(t)[:, None])


def _on_mesh(traj, data):
    """The trajectory restricted to the forcing mesh, on whose intervals z and f are constant."""
    mesh = data.p.forcing.times
    idx = np.searchsorted(traj.times, mesh)
    idx = np.minimum(idx, len(traj.times) - 1)
    if len(idx) == len(traj.times) or not np.allclose(traj.times[idx], mesh, rtol=0, atol=1e-12 * mesh[-1]):
        return traj
    return Trajectory(traj.times[idx], traj.u_hat[idx], traj.d, traj.n)


def _l2_exact(traj, data, kind, cmult=None, steps=None):
    """Exact L2(0, T; L2) norm; the per-step formulas hold on whole forcing intervals."""
    lat = data.lat
    N = lat.points.shape[0]
    h = 2 * np.pi / lat.n
    coarse = _on_mesh(traj, data)
    if coarse is not traj:
        traj, steps = coarse, None
    z, f, dt = _step_arrays(traj, data) if steps is None else steps
    # modes the forcing never excites carry only roundoff and are skipped
    act = _present(data)
    cm = None if cmult is None else np.broadcast_to(cmult, act.shape)[act]
    al, be = _quantity(kind, traj.u_hat[:-1, act], z[:, act], f[:, act], cm)
    total = float(np.sum(_exact_l2_squared(al, be, z[:, act], dt)))
    return math.sqrt(h ** lat.d / N * total)


def _one_sided_samples(traj, data, kind, cmult=None, steps=None):
    """Physical-space samples at both ends of every step: (left (K, ...), right (K, ...))."""
    shape = (traj.n,) * traj.d
    steps = _step_arrays(traj, data) if steps is None else steps
    z, f, dt = steps
    e, ph = steps.propagators
    al, be = _quantity(kind, traj.u_hat[:-1], z, f, cmult)
    end = al * e + be * ph
    axes = tuple(range(1, traj.d + 1))
    K = z.shape[0]
    left = np.fft.ifftn(al.reshape((K,) + shape), axes=axes).real
    right = np.fft.ifftn(end.reshape((K,) + shape), axes=axes).real
    return left, right


def _gradient_samples(traj, data, steps=None):
    """Euclidean length of the spectral gradient, one-sided at each step end."""
    lat = data.lat
    shape = (traj.n,) * traj.d
    steps = _step_arrays(traj, data) if steps is None else steps
    z, f, dt = steps
    e, ph = steps.propagators
    uk = traj.u_hat[:-1]
    end = e * uk + ph * f
    axes = tuple(range(1, traj.d + 1))
    K = z.shape[0]
    out = []
    for spec in (uk, end):
        sq = 0.0
        for i in range(traj.d):
            kk = np.where(lat.nyquist, 0.0, lat.points[:, i])
            g = np.fft.ifftn((1j * kk * spec).reshape((K,) + shape), axes=axes).real
            sq = sq + g * g
        out.append(np.sqrt(sq))
    return out[0], out[1]


def apriori_ratio(traj: Trajectory, p: EvolutionProblem, comparison="fractional", norm_p=2.0,
                  q=None, space_weight=None, time_weight=None, exact=None):
    """(||du/dt||, ||comparison u||, lambda ||u||) / ||f|| in L_q(w1 dt; L_{p,w2}).

    At p = q = 2 without weights the time integrals are exact per mode;
    otherwise one-sided step values are combined with the trapezoid rule.
    """
    from .norms import space_time_norm

    q = norm_p if q is None else q
    data = _StepData(p)
    cmult = comparison_multiplier(comparison, p.sigma, data.lat)
    if exact is None:
        exact = norm_p == 2 and q == 2 and space_weight is None and time_weight is None
    steps = _step_arrays(traj, data)
    if exact:
        nf = _l2_exact(traj, data, "f", steps=steps)
        norms = {k: _l2_exact(traj, data, k, cmult, steps) for k in ("dt", "op", "u")}
    else:
        def st(kind):
            if kind == "op" and isinstance(comparison, str) and comparison == "gradient":
                left, right = _gradient_samples(traj, data, steps)
            else:
                left, right = _one_sided_samples(traj, data, kind, cmult, steps)
            return space_time_norm(traj.times, left, right, norm_p, q, space_weight, time_weight)
        nf = st("f")
        norms = {k: st(k) for k in ("dt", "op", "u")}
    if nf == 0:
        raise ValueError("forcing has zero norm; ratios are undefined")
    return {"dt": norms["dt"] / nf, "op": norms["op"] / nf, "damp": p.lam * norms["u"] / nf,
            "u": norms["u"] / nf, "norm_f": nf}


def apriori_ratio_table(traj: Trajectory, p: EvolutionProblem, ps, comparison="fractional",
                        space_weight=None, time_weight=None, q=None):
    """{norm_p: apriori_ratio(...)} sharing one set of samples across exponents.

    ``q`` defaults to each ``norm_p``; p = 2 entries without weights use the exact time integrals.
    """
    from .norms import space_time_norm

    data = _StepData(p)
    cmult = comparison_multiplier(comparison, p.sigma, data.lat)
    steps = _step_arrays(traj, data)
    samples = {}
    out = {}
    for norm_p in ps:
        qq = norm_p if q is None else q
        if norm_p == 2 and qq == 2 and space_weight is None and time_weight is None:
            nf = _l2_exact(traj, data, "f", steps=steps)
            norms = {k: _l2_exact(traj, data, k, cmult, steps) for k in ("dt", "op", "u")}
        else:
            norms = {}
            for kind in ("f", "dt", "op", "u"):
                if kind not in samples:
                    if kind == "op" and isinstance(comparison, str) and comparison == "gradient":
                        samples[kind] = _gradient_samples(traj, data, steps)
                    else:
                        samples[kind] = _one_sided_samples(traj, data, kind, cmult, steps)
                left, right = samples[kind]
                norms[kind] = space_time_norm(traj.times, left, right, norm_p, qq, space_weight, time_weight)
            nf = norms.pop("f")
        if nf == 0:
            raise ValueError("forcing has zero norm; ratios are undefined")
        out[norm_p] = {"dt": norms["dt"] / nf, "op": norms["op"] / nf, "damp": p.lam * norms["u"] / nf,
                       "u": norms["u"] / nf, "norm_f": nf}
    return out


def _present(data):
    present = np.zeros(data.lat.points.shape[0], dtype=bool)
    for f in data.f_hat:
        present |= np.abs(f) > 1e-14 * max(1.0, np.abs(f).max())
    return present


def steps_for_resolution(p: EvolutionProblem, max_z_dt=0.5):
    """Smallest steps_per_interval with |z| dt <= max_z_dt on every mode the forcing excites."""
    data = _StepData(p)
    present = _present(data)
    if not np.any(present):
        return 1
    zmax = max(float(np.abs(z[present]).max()) for z in data.z)
    longest = float(np.max(np.diff(p.forcing.times)))
    return max(1, math.ceil(zmax * longest / max_z_dt))


def plancherel_constant(p: EvolutionProblem, comparison="fractional"):
    """max over present modes and schedule pieces of |M_c(xi)| / (-Re m(xi) + lambda).

    This is the exact p = 2 operator bound for ||comparison u|| / ||f||.
    """
    data = _StepData(p)
    cmult = np.abs(comparison_multiplier(comparison, p.sigma, data.lat))
    present = _present(data) & (cmult > 0)
    worst = 0.0
    for z in data.z:
        worst = max(worst, float(np.max(cmult[present] / (-z.real[present]))))
    return worst
