"""Time every kernel on its numpy and numba paths.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size small|large]

Compilation happens in a warm-up call and is excluded. Each line reports the
best of ``--repeat`` runs and the speedup of numba over numpy.
"""
import argparse
import timeit

import numpy as np

from levyop import kernels

SIZES = {"small": 1, "large": 4}


def cases(scale, rng):
    n = 64 * scale
    lines = rng.standard_normal((n, n))
    xi = rng.uniform(-50, 50, size=(4096 * scale, 2))
    atoms = rng.uniform(-3, 3, size=(64, 2))
    a = rng.uniform(0, 1, size=256 * scale)
    prefix = kernels.periodic_prefix(a)
    shifts = rng.uniform(-500, 500, size=200)
    coef = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    freqs = rng.integers(-20, 21, size=(200, 1)).astype(float)
    pts = rng.uniform(0, 2 * np.pi, size=(2000 * scale, 1))
    grid = rng.standard_normal((64 * scale, 128))
    return {
        "trig_shift": (lines, 0.37),
        "atom_symbol": (xi, atoms, rng.uniform(0, 1, 64), np.zeros(2)),
        "ball_sums": (prefix, rng.uniform(-1000, 1000, size=10000 * scale), 7.5),
        "tail_ball_average": (prefix, shifts, rng.uniform(0, 1, 200), 7.5, 0.5),
        "trig_eval": (coef, freqs, pts),
        "window_max": (grid, 8, 4),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", choices=sorted(SIZES), default="small")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':20s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}")
    for name, inputs in cases(SIZES[args.size], rng).items():
        times = []
        for fn in kernels.IMPLEMENTATIONS[name]:
            fn(*inputs)  # warm-up, compiles the numba path
            times.append(min(timeit.repeat(lambda: fn(*inputs), number=1, repeat=args.repeat)) * 1e3)
        a, b = (f(*inputs) for f in kernels.IMPLEMENTATIONS[name])
        assert np.allclose(a, b, rtol=1e-10, atol=1e-10), name
        print(f"{name:20s} {times[0]:11.3f} {times[1]:11.3f} {times[0] / times[1]:8.2f}")


if __name__ == "__main__":
    main()
