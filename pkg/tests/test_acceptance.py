"""Acceptance criteria, each at its stated tolerance, one PASS/FAIL line apiece."""

import time
import timeit

import numpy as np
import pytest
from click.testing import CliRunner

from fvpnet import analysis
from fvpnet.algorithm import initial_positions_example1, run
from fvpnet.cli import main
from fvpnet.config import bundled_config, load_config
from fvpnet.graph import (MinOccurrenceDependency, build_topology, make_rng, occurrence_counts,
                          single_link_graph_set)
from fvpnet.objective import QuadraticObjective, analytic_consensus_minimizer

SEEDS = (1, 2, 3, 4, 5)
HORIZON = 20_000
REFERENCE_OPTIMUM = np.array([-0.9002, 0.4111])


@pytest.fixture(scope="module")
def example1_runs():
    """Five seeded Example-1 runs per weight variant at the full horizon."""
    out = {}
    for variant in ("example1", "example1_log"):
        sc = load_config(bundled_config(variant))
        runs = []
        for seed in SEEDS:
            t0 = time.perf_counter()
            traj = run(sc.scenario(seed=seed, horizon=HORIZON))
            runs.append((traj, time.perf_counter() - t0))
        out[variant] = (sc.scenario().x_star, runs)
    return out


@pytest.fixture(scope="module")
def ex1():
    return load_config(bundled_config("example1"))


def test_c01_analytic_optimum(criterion):
    obj = QuadraticObjective(initial_positions_example1())
    s = analytic_consensus_minimizer(obj)
    secs = min(timeit.repeat(lambda: analytic_consensus_minimizer(obj), number=100, repeat=5)) / 100
    err = np.abs(s - REFERENCE_OPTIMUM).max()
    ok = criterion("1 analytic optimum", err <= 5e-4 and secs < 1e-3,
                   f"s*={s.round(5).tolist()} max|diff|={err:.2e} runtime={secs * 1e6:.1f}us")
    assert ok


@pytest.mark.parametrize("variant", ["example1", "example1_log"])
def test_c02_example1_convergence(example1_runs, criterion, variant):
    x_star, runs = example1_runs[variant]
    passed = 0
    parts = []
    for seed, (traj, secs) in zip(SEEDS, runs):
        dev = np.linalg.norm(traj.final - x_star, axis=1).max()
        good = dev <= 0.1 and traj.error[-1] <= traj.error[0] / 20 and secs < 10
        passed += good
        parts.append(f"seed{seed}: maxdev={dev:.3f} e_T/e_0={traj.error[-1] / traj.error[0]:.4f} "
                     f"{secs:.1f}s")
    ok = criterion(f"2 example-1 convergence [{variant}]", passed >= 4,
                   f"{passed}/5 seeds pass; " + "; ".join(parts))
    assert ok


def test_c03_quasi_nonexpansive(ex1, criterion):
    rep = analysis.check_quasi_nonexpansive(ex1.model, ex1.graph_set, 10_000, make_rng(3),
                                            tol=1e-12)
    ok = criterion("3 quasi-nonexpansivity", rep.passed and rep.samples == 10_000, str(rep))
    assert ok


def test_c04_doubly_stochastic_and_norm(ex1, criterion):
    rep = analysis.check_doubly_stochastic(ex1.model, ex1.graph_set, 1000, make_rng(4), tol=1e-12)
    ok = rep.passed and rep.samples == 1000 * len(ex1.graph_set)
    ok = criterion("4 doubly stochastic + |W|_2 <= 1", ok and rep.stats["max_norm2"] <= 1 + 1e-10,
                   f"{rep}; max|W|_2={rep.stats['max_norm2']!r}")
    assert ok


def test_c05_averaged_operator(ex1, criterion):
    reps = [analysis.check_lemma4(ex1.model, ex1.graph_set, eta, 10_000, make_rng(50 + k),
                                  tol=1e-12)
            for k, eta in enumerate((0.2, 0.5, 0.8))]
    ok = criterion("5 averaged-operator inequalities", all(r.passed for r in reps),
                   "; ".join(str(r) for r in reps))
    assert ok


def test_c06_contraction(criterion):
    obj = QuadraticObjective(initial_positions_example1())
    expected = {0.25: 0.75, 0.5: 0.5, 1.0: 0.0, 1.5: 0.5}
    parts, ok = [], True
    for beta, ratio in expected.items():
        rep = analysis.check_contraction(obj, beta, 1000, make_rng(6))
        got = rep.stats["max_ratio"]
        ok &= rep.passed and abs(got - ratio) <= 1e-9
        parts.append(f"beta={beta}: {got:.12f} (want {ratio})")
    assert criterion("6 gradient-step contraction", ok, "; ".join(parts))


def test_c07_connectivity(ex1, criterion):
    good = analysis.check_union_connectivity(ex1.graph_set, ex1.model, 100, make_rng(7))
    # edge between agents 5 and 6 (counted from one) is (4, 5) with 0-based vertices
    cut = analysis.check_union_connectivity(ex1.graph_set.without_edge((4, 5)), ex1.model, 100,
                                            make_rng(7))
    ok = (good.passed and good.stats["combinatorial"] and good.stats["min_lambda2"] > 1e-9
          and not cut.stats["combinatorial"] and cut.stats["min_lambda2"] < 1e-9)
    assert criterion("7 union connectivity", ok,
                     f"line: lambda2_min={good.stats['min_lambda2']:.3e} combinatorial="
                     f"{good.stats['combinatorial']}; cut: lambda2_min="
                     f"{cut.stats['min_lambda2']:.3e} combinatorial={cut.stats['combinatorial']}")


def test_c08_residual_decay(example1_runs, criterion):
    _, runs = example1_runs["example1"]
    ratios = [traj.residual[-1000:].mean() / traj.residual[:1000].mean() for traj, _ in runs]
    ok = criterion("8 fixed-point residual decay", all(r < 0.01 for r in ratios),
                   "last/first 1000-step mean r_t: " + ", ".join(f"{r:.2e}" for r in ratios))
    assert ok


def test_c09_mean_square(ex1, criterion):
    scenario = ex1.scenario(horizon=10_000)
    curve = analysis.monte_carlo_mean_square(scenario, 50, 10_000, seed=9)
    e2, e3, e4 = curve.at(100), curve.at(1000), curve.at(10_000)
    ok = criterion("9 mean-square decrease (R=50)", e4 < e2 and e4 < e3,
                   f"E|x-x*|^2 at t=1e2: {e2:.4g}, 1e3: {e3:.4g}, 1e4: {e4:.4g}")
    assert ok


def test_c10_determinism(tmp_path, criterion):
    cfg = bundled_config("example1")
    outs = []
    for name in ("a", "b"):
        res = CliRunner().invoke(main, ["run", "--config", str(cfg), "--seed", "10",
                                        "--out", str(tmp_path / name)])
        assert res.exit_code == 0, res.output
        outs.append((tmp_path / name / "trajectory.csv").read_bytes())
    ok = criterion("10 byte-identical trajectories", outs[0] == outs[1],
                   f"{len(outs[0])} bytes each")
    assert ok


def test_c11_dependency_process(criterion):
    top = build_topology("line", 20)
    steps = 10_000
    proc = MinOccurrenceDependency(top, 0.5, 20, seed=11)
    counts = occurrence_counts(proc.samples(steps), single_link_graph_set(top))
    freq = counts.per_edge / steps
    ok = counts.min_edge >= 1 and np.all((freq >= 0.3) & (freq <= 0.7))
    assert criterion("11 dependency process occurrence", ok,
                     f"min count={counts.min_edge} freq range=[{freq.min():.4f}, {freq.max():.4f}]")
