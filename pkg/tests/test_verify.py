import math

import numpy as np
import pytest

from levyop.grid import GridField, random_bandlimited
from levyop.measure import Atoms, DyadicComb, RadialDensity
from levyop.verify import (
    ExperimentReport, Rejected, SweepConfig, bump, counterexample_run, estimate_sweep, fractional_laplacian_constant,
    maximal_experiment, montecarlo_check, montecarlo_convergence, single_pair_expectation,
)

SMALL = dict(measures=("comb",), lambdas=(0.0, 10.0), resolutions=(64, 128), seeds=2, ps=(2.0, 4.0))


def test_small_sweep_passes_and_csv_is_deterministic():
    a = estimate_sweep(**SMALL)
    b = estimate_sweep(**SMALL)
    assert a.passed, a.summary()
    assert a.to_csv() == b.to_csv()
    assert a.to_csv().startswith("# experiment: estimate_sweep")
    assert {"n", "lambda", "p", "ratio_op", "ratio_dt"} <= set(a.columns())


def test_sweep_seed_changes_rows():
    a = estimate_sweep(**SMALL, seed=0)
    b = estimate_sweep(**SMALL, seed=1)
    assert a.to_csv() != b.to_csv()


def test_weighted_sweep_rejects_weights_outside_ap():
    base = dict(SMALL, sigma=1.5, ps=(2.0,), measures=("radial",))
    with pytest.raises(Rejected, match="A_"):
        estimate_sweep(**base, space_weight_l=1.5)
    with pytest.raises(Rejected, match="integrable"):
        estimate_sweep(**base, space_weight_l=-1.0)
    with pytest.raises(Rejected):
        estimate_sweep(**dict(base, sigma=0.5), space_weight_l=0.5)


def test_report_accessors():
    r = ExperimentReport("x", {"a": np.float64(1.5)}, [{"u": 1.0}, {"v": True}], [("c", True, "ok")], seed=3)
    assert r.passed and r.check("c")
    with pytest.raises(KeyError):
        r.check("missing")
    assert r.columns() == ["u", "v"]
    assert r.to_csv().splitlines()[-1] == ",true"
    assert "PASS" in r.summary()


def test_bump_is_smooth_and_compact():
    x = np.linspace(-2, 2, 401)
    b = bump(x)
    assert b[np.abs(x) >= 2].max() == 0.0
    assert np.all(b[np.abs(x) <= 1] == 1.0)
    assert np.all(np.diff(b[x >= 0]) <= 0)


def test_fractional_laplacian_constant_one_dim_sigma_one():
    # C_{1,1} = 1 / pi
    assert fractional_laplacian_constant(1, 1.0) == pytest.approx(1 / math.pi, rel=1e-13)


def test_counterexample_growth_rates():
    rep = counterexample_run(2.5, 4.0, 0.5, K=20)
    assert rep.passed, rep.summary()
    lin = counterexample_run(2.0, 4.0, 0.5, K=20)
    assert lin.check("linear_growth")


def test_counterexample_rejects_empty_range():
    with pytest.raises(Rejected):
        counterexample_run(1.0, 2.0, 1.5)


def test_single_pair_closed_form_by_simulation():
    h, w, xi0, t = 0.5, 3.0, 2.0, 0.4
    m = Atoms(0.5, [[h], [-h]], [w, w])
    u0 = GridField.from_function(lambda x: np.cos(xi0 * x), 1, 32)
    rep = montecarlo_check(m, u0, t, samples=20000, seed=1)
    assert rep.passed
    x = np.array([r["x0"] for r in rep.rows])
    np.testing.assert_allclose([r["spectral"] for r in rep.rows], single_pair_expectation(h, w, xi0, x, t),
                               atol=1e-12)


def test_montecarlo_rejects_density():
    with pytest.raises(Rejected):
        montecarlo_check(RadialDensity(1.0), random_bandlimited(1, 16, rng=0), 0.1)


def test_montecarlo_convergence_small():
    m = DyadicComb(1.0, 1, 0, 3)
    u0 = random_bandlimited(1, 32, kmax=4, rng=0)
    rep = montecarlo_convergence(m, u0, 0.1, sizes=(200, 20000), reps=6)
    assert rep.passed, rep.summary()


def test_maximal_experiment_small():
    rep = maximal_experiment(sigmas=(1.0,), kappas=(0.5, 0.25), fields=3, n=32)
    assert rep.passed, rep.summary()


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(resolutions=())
    with pytest.raises(ValueError):
        SweepConfig(pieces=3)
    assert SweepConfig(sigma=1.5, resolutions=(64, 256)).pieces_for(256) == 32
