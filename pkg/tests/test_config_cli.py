import re
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from fvpnet.cli import main
from fvpnet.config import ConfigError, bundled_config, load_config, parse_config
from fvpnet.graph import GraphSample
from fvpnet.output import read_mean_square_csv, read_trajectory_csv

BASE = bundled_config("example1").read_text()

SMALL = """
[topology]
kind = "line"
m = 6

[process]
kind = "min_occurrence"
p_fail = 0.5
window = 5

[weight]
kind = "cucker_smale"
Q = 0.25

[objective]
kind = "quadratic"

[initial]
kind = "circle"
radius = 5.0
divisions = 8

[algo]
eta = 0.8
beta = 1.0
horizon = 120
seed = 3
record_every = 10

[checks]
samples = 100
state_samples = 10
steps = 500
eta_values = [0.5]

[output]
plots = {plots}
"""


def _small(tmp_path, plots="false", extra=""):
    p = tmp_path / "small.toml"
    p.write_text(SMALL.format(plots=plots) + extra)
    return p


def _problems(text):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    return exc.value.problems


def test_bundled_configs_parse():
    for name in ("example1", "example1_log"):
        sc = load_config(bundled_config(name))
        assert sc.topology.m == 20 and sc.x0.shape == (20, 2)
        assert sc.algo.horizon == 20_000 and sc.algo.eta == 0.8
        assert sc.checks and sc.eta_values == [0.2, 0.5, 0.8]


def test_missing_beta_is_named():
    text = re.sub(r"^beta = 1\.0\n", "", BASE, flags=re.M)
    probs = _problems(text)
    assert any("algo.beta" in p and "missing" in p for p in probs)


def test_beta_out_of_range_reports_bound():
    probs = _problems(BASE.replace("beta = 1.0", "beta = 3.0"))
    assert any("algo.beta" in p and "(0, 2/K)" in p for p in probs)


def test_unknown_key_and_type_mismatch_have_line_numbers():
    text = BASE.replace("m = 20", "m = 20\ncolour = \"red\"").replace("eta = 0.8", "eta = \"fast\"")
    probs = _problems(text)
    lines = text.splitlines()
    colour_line = 1 + lines.index('colour = "red"')
    eta_line = 1 + lines.index('eta = "fast"')
    assert f"line {colour_line}: topology.colour: unknown key" in probs
    assert any(p.startswith(f"line {eta_line}: algo.eta: expected float") for p in probs)


def test_all_problems_reported_together():
    text = BASE.replace("eta = 0.8", "eta = 1.5").replace("zeta = 1.0", "zeta = 2.0")
    probs = _problems(text)
    assert any("algo.eta" in p for p in probs) and any("algo.zeta" in p for p in probs)


def test_degree_bound_violation_rejected():
    text = BASE.replace('kind = "line"', 'kind = "complete"').replace("Q = 0.25", "Q = 0.9")
    assert any("weight" in p for p in _problems(text))


def test_custom_objective_needs_declared_constants():
    text = BASE.replace('kind = "quadratic"', 'kind = "custom"')
    assert any("hessian" in p for p in _problems(text))
    ok = text.replace('anchors = "from_initial_positions"',
                      'anchors = "from_initial_positions"\nhessian = [[1.0, 0.0], [0.0, 1.5]]\n'
                      'rho = 1.0\nK = 1.5')
    assert parse_config(ok).objective.K == 1.5


def test_unknown_check_name():
    assert any("unknown check" in p
               for p in _problems(BASE.replace('"probe"]', '"probe", "vibes"]')))


def test_csv_initial_positions(tmp_path):
    rows = np.arange(12.0).reshape(6, 2)
    (tmp_path / "x0.csv").write_text("# agents\n" + "\n".join(f"{a},{b}" for a, b in rows))
    text = SMALL.format(plots="false").replace('kind = "circle"\nradius = 5.0\ndivisions = 8',
                                               'kind = "csv"\npath = "x0.csv"')
    p = tmp_path / "c.toml"
    p.write_text(text)
    np.testing.assert_array_equal(load_config(p).x0, rows)


def test_cli_run_writes_csvs_and_reproduces(tmp_path):
    cfg = _small(tmp_path)
    r = CliRunner()
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        res = r.invoke(main, ["run", "--config", str(cfg), "--out", str(out)])
        assert res.exit_code == 0, res.output
    for name in ("trajectory.csv", "summary.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    text = (a / "trajectory.csv").read_text()
    assert text.startswith("# fvp-net-opt v1\nt,alpha,e_t,r_t,f_mean,active_edges,x0_0,x0_1")
    data = read_trajectory_csv(a / "trajectory.csv")
    assert len(data["t"]) == 121
    assert list(data["state_t"]) == list(range(0, 121, 10))
    res = r.invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path / "c"),
                          "--seed", "4"])
    assert (tmp_path / "c" / "trajectory.csv").read_bytes() != (a / "trajectory.csv").read_bytes()


def test_hex_mask_column_round_trips(tmp_path):
    cfg = _small(tmp_path)
    CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path)])
    sc = load_config(cfg)
    for h in read_trajectory_csv(tmp_path / "trajectory.csv")["active_edges"][1:20]:
        s = GraphSample.from_hex(sc.topology, h)
        assert s.hex_mask() == h
        assert s.active.shape == (5,)


def test_dump_mixing(tmp_path):
    cfg = _small(tmp_path)
    res = CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path),
                                    "--dump-mixing", "--horizon", "30"])
    assert res.exit_code == 0, res.output
    lines = (tmp_path / "mixing.csv").read_text().splitlines()
    assert lines[0] == "# fvp-net-opt v1" and lines[1] == "t,i,j,w"
    rows = [ln.split(",") for ln in lines[2:]]
    for t in {r[0] for r in rows}:
        W = np.zeros((6, 6))
        for r in rows:
            if r[0] == t:
                W[int(r[1]), int(r[2])] = float(r[3])
        np.testing.assert_allclose(W.sum(axis=0), 1, atol=1e-12)
        np.testing.assert_allclose(W.sum(axis=1), 1, atol=1e-12)


def test_svgs_regenerate_from_csv_alone(tmp_path):
    from fvpnet.plotting import plot_trajectory_csv
    cfg = _small(tmp_path, plots="true")
    res = CliRunner().invoke(main, ["run", "--config", str(cfg), "--out", str(tmp_path / "r")])
    assert res.exit_code == 0, res.output
    names = ["coord1.svg", "coord2.svg", "path2d.svg", "error.svg"]
    first = {n: (tmp_path / "r" / n).read_bytes() for n in names}
    assert all(b.lstrip().startswith(b"<?xml") for b in first.values())
    # only the CSV is copied; the figures must come back identical
    (tmp_path / "p").mkdir()
    (tmp_path / "p" / "trajectory.csv").write_bytes((tmp_path / "r" / "trajectory.csv").read_bytes())
    plot_trajectory_csv(tmp_path / "p" / "trajectory.csv", tmp_path / "p")
    for n in names:
        assert (tmp_path / "p" / n).read_bytes() == first[n]


def test_cli_check_passes_and_fails(tmp_path):
    cfg = _small(tmp_path)
    res = CliRunner().invoke(main, ["check", "--config", str(cfg), "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert res.output.count("PASS") >= 8 and "FAIL" not in res.output
    assert (tmp_path / "checks.csv").exists()
    bad = _small(tmp_path, extra="")
    # an always-failing link process never shows the graphs: occurrence must fail
    bad.write_text(bad.read_text().replace("p_fail = 0.5\nwindow = 5",
                                           'p_fail = 1.0'
                                           ).replace('kind = "min_occurrence"', 'kind = "bernoulli"'))
    res = CliRunner().invoke(main, ["check", "--config", str(bad), "--out", str(tmp_path)])
    assert res.exit_code == 1
    assert "FAIL occurrence" in res.output


def test_cli_config_error_exit_code(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text(BASE.replace("beta = 1.0", "beta = 3.0"))
    res = CliRunner().invoke(main, ["run", "--config", str(p)])
    assert res.exit_code == 2
    assert "algo.beta" in res.output
    res = CliRunner().invoke(main, ["run", "--config", str(tmp_path / "nope.toml")])
    assert res.exit_code == 2


def test_cli_mc(tmp_path):
    cfg = _small(tmp_path, plots="true")
    res = CliRunner().invoke(main, ["mc", "--config", str(cfg), "--out", str(tmp_path),
                                    "--runs", "4", "--horizon", "50"])
    assert res.exit_code == 0, res.output
    curve = read_mean_square_csv(tmp_path / "mean_square.csv")
    assert len(curve["t"]) == 51 and np.all(curve["half_width"] >= 0)
    assert (tmp_path / "mean_square.svg").exists()
    res = CliRunner().invoke(main, ["mc", "--config", str(cfg), "--runs", "1"])
    assert res.exit_code == 2


def test_cli_example1_short(tmp_path):
    res = CliRunner().invoke(main, ["example1", "--variant", "log", "--horizon", "200",
                                    "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    assert "target=[-0.9004  0.4112]" in res.output
    assert (tmp_path / "path2d.svg").exists()
