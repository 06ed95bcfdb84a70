"""YAML run configurations: strict key checking and builders for measures, fields and experiments."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import yaml

from .measure import (
    AxisStable, Atoms, DyadicComb, LevyMeasure, Polar, RadialDensity, Scaled, Sum, TimeDependentMeasure,
    log_grid, xi_grid,
)
from .verify import SweepConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config", "build_measure_from", "build_schedule"]


class ConfigError(ValueError):
    """The configuration does not parse or does not match the schema."""


MEASURE_KEYS = {"kind", "sigma", "dim", "c", "k_min", "k_max", "atoms", "directions", "parts", "factor"}
SCHEDULE_KEYS = {"t_start", "t_end", "measure"}
SYMBOL_KEYS = {"mode", "xi_min", "xi_max", "xi_points", "xi", "t"}
FORCING_KEYS = {"kind", "kmax", "xi0", "amplitude"}
SOLVE_KEYS = {"n", "lambda", "horizon_t", "pieces", "steps_per_interval", "forcing"}
FIELD_KEYS = {"kind", "n", "kmax", "xi0", "amplitude"}
EXPERIMENT_KEYS = {
    "estimate_sweep": {f.name for f in dataclasses.fields(SweepConfig)} - {"seed"},
    "counterexample": {"l", "p", "sigma", "d", "K", "cauchy_radius_log2", "cauchy_tol"},
    "montecarlo": {"t", "samples", "field", "probes", "n_se", "convergence_sizes", "convergence_reps"},
    "maximal_boundedness": {"sigmas", "kappas", "p", "fields", "n", "slope_tol"},
}
TOP_KEYS = {"measure", "schedule", "symbol", "solve", "experiment", "seed", "verbosity"}


def _check(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(str, extra))}")


@dataclass
class RunConfig:
    """Validated configuration tree; sections absent from the file stay None."""

    measure: dict | None = None
    schedule: list | None = None
    symbol: dict = field(default_factory=dict)
    solve: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    seed: int = 0
    verbosity: int = 0

    def measure_obj(self):
        if self.measure is None:
            raise ConfigError("configuration has no 'measure' section")
        return build_measure_from(self.measure)

    def schedule_obj(self, horizon):
        if self.schedule is None:
            return TimeDependentMeasure.constant(self.measure_obj(), horizon)
        return build_schedule(self.schedule)


def _validate_measure(d, where="measure"):
    _check(d, MEASURE_KEYS, where)
    if "kind" not in d:
        raise ConfigError(f"{where}: missing 'kind'")
    for i, part in enumerate(d.get("parts", []) or []):
        _validate_measure(part, f"{where}.parts[{i}]")


def parse_config(text: str) -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config does not parse: {exc}") from exc
    if raw is None:
        raw = {}
    _check(raw, TOP_KEYS, "config")
    if "measure" in raw:
        _validate_measure(raw["measure"])
    if "schedule" in raw:
        if not isinstance(raw["schedule"], list) or not raw["schedule"]:
            raise ConfigError("schedule: expected a nonempty list")
        for i, piece in enumerate(raw["schedule"]):
            _check(piece, SCHEDULE_KEYS, f"schedule[{i}]")
            _validate_measure(piece.get("measure", {}), f"schedule[{i}].measure")
    if "symbol" in raw:
        _check(raw["symbol"], SYMBOL_KEYS, "symbol")
    if "solve" in raw:
        _check(raw["solve"], SOLVE_KEYS, "solve")
        if "forcing" in raw["solve"]:
            _check(raw["solve"]["forcing"], FORCING_KEYS, "solve.forcing")
    if "experiment" in raw:
        _check(raw["experiment"], set(EXPERIMENT_KEYS), "experiment")
        for name, body in raw["experiment"].items():
            _check(body or {}, EXPERIMENT_KEYS[name], f"experiment.{name}")
            if name == "montecarlo" and "field" in (body or {}):
                _check(body["field"], FIELD_KEYS, "experiment.montecarlo.field")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    return RunConfig(raw.get("measure"), raw.get("schedule"), raw.get("symbol") or {}, raw.get("solve") or {},
                     raw.get("experiment") or {}, seed, int(raw.get("verbosity", 0)))


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def build_measure_from(d: dict) -> LevyMeasure:
    """Measure from a config mapping; construction errors surface as ConfigError."""
    kind = d["kind"]
    sigma = d.get("sigma")
    dim = int(d.get("dim", 1))
    try:
        if kind == "comb":
            return DyadicComb(float(sigma), dim, int(d.get("k_min", -30)), int(d.get("k_max", 30)))
        if kind == "axis":
            return AxisStable(float(sigma), dim, float(d.get("c", 1.0)))
        if kind == "radial":
            return RadialDensity(float(sigma), dim, float(d.get("c", 1.0)))
        if kind == "atoms":
            atoms = d.get("atoms") or []
            pos, wts = [], []
            for a in atoms:  # {position, weight} or [coords..., weight]
                if isinstance(a, dict):
                    pos.append(np.atleast_1d(np.asarray(a["position"], dtype=float)))
                    wts.append(float(a["weight"]))
                else:
                    pos.append(np.asarray(a[:-1], dtype=float))
                    wts.append(float(a[-1]))
            return Atoms(float(sigma), np.array(pos).reshape(len(pos), -1), np.array(wts))
        if kind == "polar":
            dirs = d.get("directions") or []
            return Polar(float(sigma), np.array([np.asarray(a["direction"], dtype=float) for a in dirs]),
                         np.array([float(a["weight"]) for a in dirs]))
        if kind == "sum":
            return Sum(tuple(build_measure_from(p) for p in d.get("parts", [])))
        if kind == "scaled":
            parts = d.get("parts") or []
            if len(parts) != 1:
                raise ConfigError("scaled measure needs exactly one entry in 'parts'")
            return Scaled(float(d["factor"]), build_measure_from(parts[0]))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"measure of kind {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown measure kind {kind!r}")


def build_schedule(items) -> TimeDependentMeasure:
    try:
        return TimeDependentMeasure(tuple((float(p["t_start"]), float(p["t_end"]), build_measure_from(p["measure"]))
                                          for p in items))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"schedule: {exc}") from exc


def symbol_grid(section: dict, dim: int):
    """Frequency rows for the symbol subcommand."""
    if "xi" in section:
        return np.asarray(section["xi"], dtype=float).reshape(-1, dim)
    lo = float(section.get("xi_min", 2.0 ** -10))
    hi = float(section.get("xi_max", 2.0 ** 10))
    pts = int(section.get("xi_points", 257))
    if dim == 1:
        return log_grid(lo, hi, pts)[:, None]
    return xi_grid(dim, lo, hi, pts)
