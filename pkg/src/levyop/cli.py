"""Command-line front end: ``levyop {validate,symbol,solve,experiment} --config PATH``.

Exit codes: 0 success, 1 computed but failed, 2 usage or configuration error.
The summary goes to stdout; data goes to CSV files under ``--out``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .config import ConfigError, load_config, symbol_grid
from .grid import GridField
from .measure import check_assumptions
from .solver import EvolutionProblem, PiecewiseForcing, residual, solve
from .symbol import Symbol, certify_lower_bound, certify_upper_bound, symbol_table
from .verify import (
    Rejected, SweepConfig, counterexample_run, estimate_sweep, maximal_experiment, montecarlo_check,
    montecarlo_convergence,
)

EXPERIMENTS = ("estimate_sweep", "counterexample", "montecarlo", "maximal_boundedness")


def _write(out, name, text):
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _csv(header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in r))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- commands

def cmd_validate(cfg, args):
    m = cfg.measure_obj() if cfg.schedule is None else cfg.schedule_obj(None)
    rep = check_assumptions(m)
    print("\n".join(rep.lines()))
    _write(args.out, "validate.csv", _csv(
        ["lambda_hat", "nondegen_hat", "cancellation_max", "upper_ok", "nondegen_ok", "cancellation_ok", "passed"],
        [[rep.lambda_hat, rep.nondegen_hat, rep.cancellation_max, rep.upper_ok, rep.nondegen_ok,
          rep.cancellation_ok, rep.passed]]))
    return 0 if rep.passed else 1


def cmd_symbol(cfg, args):
    m = cfg.measure_obj()
    rep = check_assumptions(m)
    if not rep.passed:
        print("\n".join(rep.lines()))
        print("measure fails the assumption check")
        return 1
    s = Symbol(m, cfg.symbol.get("mode", "closed"))
    xi = symbol_grid(cfg.symbol, m.dim)
    t = float(cfg.symbol.get("t", 0.0))
    up = certify_upper_bound(s, xi, t)
    low = certify_lower_bound(s, xi, t)
    table = symbol_table(s, xi, t)
    head = [f"xi{i}" for i in range(m.dim)] + ["re_m", "im_m", "ratio_upper", "ratio_lower"]
    _write(args.out, "symbol.csv", _csv(head, table.tolist()))
    print(f"upper constant sup |m|/|xi|^sigma   = {up.constant!r}")
    print(f"lower constant inf -Re m/|xi|^sigma = {low.constant!r}")
    print(f"chain -Re m >= N(xi)/3 holds: {low.chain_ok}")
    ok = math.isfinite(up.constant) and low.constant > 0 and low.chain_ok
    return 0 if ok else 1


def _forcing(section, d, n, times, seed):
    kind = section.get("kind", "random")
    if kind == "zero":
        return PiecewiseForcing(times, [GridField.zeros(d, n)] * (len(times) - 1))
    if kind == "mode":
        xi0 = float(section.get("xi0", 1.0))
        amp = float(section.get("amplitude", 1.0))
        f = GridField.from_function(lambda *xs: amp * np.cos(xi0 * xs[0]), d, n)
        return PiecewiseForcing(times, [f] * (len(times) - 1))
    if kind == "random":
        return PiecewiseForcing.random(d, n, times, section.get("kmax"), rng=seed)
    raise ConfigError(f"solve.forcing: unknown kind {kind!r}")


def cmd_solve(cfg, args):
    sec = cfg.solve
    T = float(sec.get("horizon_t", 1.0))
    sched = cfg.schedule_obj(T)
    d = sched.dim
    n = int(sec.get("n", 64))
    pieces = int(sec.get("pieces", 1))
    times = np.unique(np.concatenate([np.linspace(0.0, T, pieces + 1), sched.breakpoints]))
    forcing = _forcing(sec.get("forcing", {}), d, n, times, args.seed)
    rep = check_assumptions(sched)
    if not rep.passed:
        print("\n".join(rep.lines()))
        print("rejected: the measure fails the assumption check")
        return 1
    prob = EvolutionProblem(sched, float(sec.get("lambda", 0.0)), forcing,
                            int(sec.get("steps_per_interval", 1)), validate=False)
    traj = solve(prob)
    res = residual(traj, prob)
    h = 2 * np.pi / n
    norms = np.sqrt(h ** d / n ** d * np.sum(np.abs(traj.u_hat) ** 2, axis=1))
    _write(args.out, "trajectory.csv", _csv(["t", "l2_norm"], np.column_stack([traj.times, norms]).tolist()))
    final = traj.state(len(traj.times) - 1)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "u_final.bin"), "wb") as fh:
        fh.write(final.to_bytes())
    if d == 1:
        _write(args.out, "u_final.csv", final.to_csv())
    manifest = {
        "measure": [{"t_start": a, "t_end": b, "measure": m.describe()} for a, b, m in sched.schedule],
        "lambda": prob.lam, "n": n, "d": d, "horizon_t": T, "forcing_times": times.tolist(),
        "forcing": sec.get("forcing", {}), "steps_per_interval": prob.steps_per_interval, "seed": args.seed,
        "residual": res, "final_l2": float(norms[-1]), "max_l2": float(norms.max()),
    }
    _write(args.out, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"steps={len(traj.times) - 1} final_l2={float(norms[-1])!r} residual={res!r}")
    return 0 if res < 1e-8 else 1


def _plot(report, out):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    if report.experiment.startswith("estimate_sweep"):
        rows = report.rows
        for key in sorted({(r["measure"], r["p"]) for r in rows}, key=str):
            ns = sorted({r["n"] for r in rows})
            ax.plot(ns, [max(r["ratio_op"] for r in rows if (r["measure"], r["p"]) == key and r["n"] == n)
                         for n in ns], marker="o", label=f"{key[0]}, p={key[1]}")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("resolution n")
        ax.set_ylabel("max ratio ||L u|| / ||f||")
    elif report.experiment == "counterexample":
        rows = [r for r in report.rows if "k" in r]
        ax.semilogy([r["k"] for r in rows], [r["partial_sum"] for r in rows], marker="o")
        ax.set_xlabel("K")
        ax.set_ylabel("S_K")
    elif report.experiment == "maximal_boundedness":
        for s in sorted({r["sigma"] for r in report.rows}):
            kaps = sorted({r["kappa"] for r in report.rows if r["sigma"] == s})
            top = [max(r["ratio"] for r in report.rows if r["sigma"] == s and r["kappa"] == k) for k in kaps]
            ax.semilogx(kaps, top, marker="o", label=f"sigma={s}")
        ax.set_xlabel("kappa")
        ax.set_ylabel("max ||T u||_p / ||u||_p")
    elif report.experiment == "montecarlo_convergence":
        ax.loglog([r["samples"] for r in report.rows], [r["rms_error"] for r in report.rows], marker="o")
        ax.set_xlabel("samples")
        ax.set_ylabel("rms error")
    else:
        rows = report.rows
        ax.errorbar(range(len(rows)), [r.get("mc_mean", 0) for r in rows],
                    yerr=[3 * r.get("std_error", 0) for r in rows], fmt="o", label="MC")
        ax.plot(range(len(rows)), [r.get("spectral", 0) for r in rows], "x", label="spectral")
        ax.set_xlabel("probe")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=7)
    fig.tight_layout()
    path = os.path.join(out, f"{report.experiment}.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _mc_field(section, seed):
    kind = section.get("kind", "mode")
    n = int(section.get("n", 64))
    if kind == "mode":
        xi0 = float(section.get("xi0", 2.0))
        amp = float(section.get("amplitude", 1.0))
        return GridField.from_function(lambda x: amp * np.cos(xi0 * x), 1, n)
    if kind == "random":
        from .grid import random_bandlimited

        return random_bandlimited(1, n, section.get("kmax", 4), rng=seed)
    raise ConfigError(f"experiment.montecarlo.field: unknown kind {kind!r}")


def cmd_experiment(cfg, args):
    name = args.name
    body = dict(cfg.experiment.get(name) or {})
    seed = args.seed
    if name == "estimate_sweep":
        for key in ("measures", "lambdas", "resolutions", "ps", "comparisons"):
            if key in body and body[key] is not None:
                body[key] = tuple(body[key])
        try:
            sc = SweepConfig(**body, seed=seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"experiment.estimate_sweep: {exc}") from exc
        reports = [estimate_sweep(sc)]
    elif name == "counterexample":
        reports = [counterexample_run(**{"l": 2.5, "p": 4.0, "sigma": 0.5, "d": 1, "K": 20, **body})]
    elif name == "montecarlo":
        m = cfg.measure_obj()
        u0 = _mc_field(body.pop("field", {}), seed)
        sizes = tuple(body.pop("convergence_sizes", ()))
        reps = int(body.pop("convergence_reps", 20))
        t = float(body.pop("t", 0.1))
        reports = [montecarlo_check(m, u0, t, seed=seed, **body)]
        if sizes:
            reports.append(montecarlo_convergence(m, u0, t, sizes, reps, seed, body.get("probes")))
    elif name == "maximal_boundedness":
        for key in ("sigmas", "kappas"):
            if key in body:
                body[key] = tuple(body[key])
        reports = [maximal_experiment(seed=seed, **body)]
    else:  # argparse restricts names; kept for programmatic callers
        raise ConfigError(f"unknown experiment {name!r}")
    for rep in reports:
        _write(args.out, f"{rep.experiment}.csv", rep.to_csv())
        print(rep.summary())
        if args.plots:
            _plot(rep, args.out)
    return 0 if all(r.passed for r in reports) else 1


COMMANDS = {"validate": cmd_validate, "symbol": cmd_symbol, "solve": cmd_solve, "experiment": cmd_experiment}


def build_parser():
    parser = argparse.ArgumentParser(prog="levyop", description="Nonlocal operators with general Levy measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", default="levyop-out", help="output directory for CSV files and plots")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--plots", action="store_true", help="write static PNG plots")

    for name in ("validate", "symbol", "solve"):
        common(sub.add_parser(name))
    ex = sub.add_parser("experiment")
    ex.add_argument("name", choices=EXPERIMENTS)
    common(ex)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = cfg.seed
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, Rejected) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        # invalid parameter combinations found while computing (rejected measures, empty ranges)
        print(f"rejected: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
