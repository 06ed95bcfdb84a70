import numpy as np
import pytest

from levyop.cli import main
from levyop.config import ConfigError, build_measure_from, parse_config
from levyop.grid import GridField
from levyop.measure import Atoms, DyadicComb, Scaled, Sum

COMB = "measure: {kind: comb, sigma: 1.0, dim: 1}\n"


def _run(tmp_path, text, *args):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(text)
    out = tmp_path / "out"
    return main([*args, "--config", str(cfg), "--out", str(out)]), out


def test_parse_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(COMB + "bogus: 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("measure: {kind: comb, sigma: 1.0, colour: red}\n")
    with pytest.raises(ConfigError):
        parse_config("experiment: {estimate_sweep: {nope: 1}}\n")
    with pytest.raises(ConfigError):
        parse_config("seed: 1.5\n")
    with pytest.raises(ConfigError, match="parse"):
        parse_config("measure: [unclosed\n")


def test_measure_builders():
    m = build_measure_from({"kind": "sum", "parts": [
        {"kind": "comb", "sigma": 0.5},
        {"kind": "scaled", "factor": 2.0, "parts": [{"kind": "atoms", "sigma": 0.5,
                                                     "atoms": [{"position": 1.0, "weight": 1.0}]}]}]})
    assert isinstance(m, Sum)
    assert isinstance(m.parts[0], DyadicComb) and isinstance(m.parts[1], Scaled)
    assert isinstance(m.parts[1].inner, Atoms)
    with pytest.raises(ConfigError):
        build_measure_from({"kind": "comb"})
    with pytest.raises(ConfigError):
        build_measure_from({"kind": "triangle", "sigma": 1.0})


def test_validate_exit_codes(tmp_path):
    code, out = _run(tmp_path, COMB, "validate")
    assert code == 0 and (out / "validate.csv").exists()
    one_atom = "measure: {kind: atoms, sigma: 0.5, atoms: [{position: 1.0, weight: 1.0}]}\n"
    assert _run(tmp_path, one_atom, "validate")[0] == 1
    assert _run(tmp_path, COMB + "extra: 2\n", "validate")[0] == 2
    assert main(["validate"]) == 2  # missing --config
    assert main(["validate", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_symbol_csv(tmp_path):
    code, out = _run(tmp_path, "measure: {kind: radial, sigma: 1.0}\nsymbol: {xi_points: 9}\n", "symbol")
    assert code == 0
    rows = np.loadtxt(out / "symbol.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 3], np.pi, rtol=1e-12)


def test_solve_writes_round_trip_field(tmp_path):
    text = COMB + "solve: {n: 32, lambda: 1.0, horizon_t: 0.5, pieces: 2, forcing: {kind: mode, xi0: 2}}\n"
    code, out = _run(tmp_path, text, "solve")
    assert code == 0
    u = GridField.from_bytes((out / "u_final.bin").read_bytes())
    assert u.n == 32 and np.abs(u.values).max() > 0
    assert (out / "trajectory.csv").read_text().startswith("t,l2_norm")


def test_experiment_csv_byte_identical(tmp_path):
    text = "experiment: {maximal_boundedness: {sigmas: [1.0], kappas: [0.5, 0.25], fields: 2, n: 32}}\nseed: 4\n"
    code, out = _run(tmp_path, text, "experiment", "maximal_boundedness")
    first = (out / "maximal_boundedness.csv").read_bytes()
    code2, out2 = _run(tmp_path, text, "experiment", "maximal_boundedness")
    assert code == code2 == 0
    assert (out2 / "maximal_boundedness.csv").read_bytes() == first
    assert b"# seed: 4" in first


def test_experiment_rejections(tmp_path):
    text = "experiment: {counterexample: {l: 1.0, p: 2.0, sigma: 1.5}}\n"
    assert _run(tmp_path, text, "experiment", "counterexample")[0] == 2
    assert main(["experiment", "nonsense", "--config", "x.yaml"]) == 2
    mc = "measure: {kind: radial, sigma: 1.0}\nexperiment: {montecarlo: {samples: 100}}\n"
    assert _run(tmp_path, mc, "experiment", "montecarlo")[0] == 2


def test_seed_flag_overrides_config(tmp_path):
    text = "experiment: {maximal_boundedness: {sigmas: [1.0], kappas: [0.5, 0.25], fields: 2, n: 32}}\n"
    cfg = tmp_path / "run.yaml"
    cfg.write_text(text)
    assert main(["experiment", "maximal_boundedness", "--config", str(cfg), "--out", str(tmp_path / "a"),
                 "--seed", "9"]) == 0
    assert b"# seed: 9" in (tmp_path / "a" / "maximal_boundedness.csv").read_bytes()


def test_atoms_accept_list_form():
    m = build_measure_from({"kind": "atoms", "sigma": 0.5, "atoms": [[1.0, 0.0, 2.0], [0.0, -1.0, 0.5]]})
    pos, w = m.atoms()
    np.testing.assert_array_equal(pos, [[1.0, 0.0], [0.0, -1.0]])
    np.testing.assert_array_equal(w, [2.0, 0.5])


def test_symbol_single_point_grid(tmp_path):
    code, out = _run(tmp_path, "measure: {kind: radial, sigma: 1.5}\nsymbol: {xi: [2.0]}\n", "symbol")
    assert code == 0
    lines = (out / "symbol.csv").read_text().splitlines()
    assert lines[0] == "xi0,re_m,im_m,ratio_upper,ratio_lower" and len(lines) == 2


def test_solve_zero_forcing_and_manifest(tmp_path):
    import json

    text = COMB + "solve: {n: 16, horizon_t: 1.0, forcing: {kind: zero}}\n"
    code, out = _run(tmp_path, text, "solve")
    assert code == 0
    assert np.all(GridField.from_bytes((out / "u_final.bin").read_bytes()).values == 0)
    man = json.loads((out / "manifest.json").read_text())
    assert man["final_l2"] == 0.0 and man["measure"][0]["measure"]["kind"] == "comb"


def test_maximal_csv_has_per_field_rows(tmp_path):
    text = "experiment: {maximal_boundedness: {sigmas: [1.0], kappas: [0.5, 0.25], fields: 3, n: 32}}\n"
    code, out = _run(tmp_path, text, "experiment", "maximal_boundedness")
    header = [l for l in (out / "maximal_boundedness.csv").read_text().splitlines() if not l.startswith("#")][0]
    assert header == "sigma,kappa,field_id,ratio"


def test_shipped_configs_parse():
    import pathlib

    from levyop.config import load_config

    files = sorted((pathlib.Path(__file__).parent.parent / "configs").glob("*.yaml"))
    assert files
    for f in files:
        load_config(f)
