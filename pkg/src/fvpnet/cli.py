"""Command line: ``fvpnet run|check|mc|example1``.

Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import analysis
from .algorithm import run as run_scenario
from .config import ConfigError, ScenarioConfig, bundled_config, load_config
from .graph import make_rng
from .objective import probe_constants
from .output import (write_checks_csv, write_mean_square_csv, write_mixing_csv,
                     write_summary_csv, write_trajectory_csv)
from .weights import build_mixing_matrix

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def _load(path) -> ScenarioConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        for p in exc.problems:
            click.echo(f"config error: {p}", err=True)
        sys.exit(EXIT_CONFIG)
    except OSError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def do_run(sc: ScenarioConfig, out_dir, seed=None, horizon=None, dump_mixing=False,
           plots=None) -> dict:
    """Simulate one scenario and write its CSVs (and SVGs); returns the written paths."""
    scenario = sc.scenario(seed=seed, horizon=horizon)
    out_dir = Path(out_dir)
    mixing = []

    def grab(t, x, sample):
        if t % scenario.cfg.record_every == 0:
            mixing.append((t, build_mixing_matrix(sample, scenario.model, x)))

    traj = run_scenario(scenario, on_step=grab if dump_mixing else None)
    files = {
        "trajectory": write_trajectory_csv(traj, out_dir / "trajectory.csv", sc.states),
        "summary": write_summary_csv(traj, scenario.target, out_dir / "summary.csv"),
    }
    if dump_mixing:
        files["mixing"] = write_mixing_csv(mixing, out_dir / "mixing.csv")
    if sc.plots if plots is None else plots:
        from .plotting import plot_trajectory_csv
        files["plots"] = plot_trajectory_csv(files["trajectory"], out_dir)
    files["trajectory_obj"] = traj
    files["target"] = scenario.target
    return files


def run_checks(sc: ScenarioConfig, seed: int = 0) -> list[analysis.CheckReport]:
    """Every check enabled in the config, each with its own seeded substream."""
    streams = dict(zip(sc.checks, np.random.SeedSequence(seed).spawn(len(sc.checks))))
    n = sc.x0.shape[1]
    N = sc.check_samples
    reports = []
    for name in sc.checks:
        rng = make_rng(streams[name])
        if name == "quasi_nonexpansive":
            reports.append(analysis.check_quasi_nonexpansive(sc.model, sc.graph_set, N, rng, n=n))
        elif name == "lemma4":
            for eta in sc.eta_values:
                reports.append(analysis.check_lemma4(sc.model, sc.graph_set, eta, N, rng, n=n))
        elif name == "doubly_stochastic":
            reports.append(analysis.check_doubly_stochastic(sc.model, sc.graph_set,
                                                            sc.state_samples, rng, n=n))
        elif name == "norm_bound":
            reports.append(analysis.check_norm_bound(sc.model, sc.graph_set, N, rng, n=n))
        elif name == "connectivity":
            reports.append(analysis.check_union_connectivity(sc.graph_set, sc.model,
                                                             sc.state_samples, rng, n=n))
        elif name == "contraction":
            reports.append(analysis.check_contraction(sc.objective, sc.algo.beta, N, rng))
        elif name == "occurrence":
            process = sc.process_factory(streams[name])
            reports.append(analysis.check_occurrence(process, sc.check_steps, sc.graph_set))
        elif name == "probe":
            res = probe_constants(sc.objective, max(N, 2), rng)
            rep = analysis.CheckReport("probe_constants", samples=res.pairs, tol=1e-9,
                                       worst_margin=min(res.rho_hat - sc.objective.rho,
                                                        sc.objective.K - res.K_hat),
                                       detail=f"rho_hat={res.rho_hat:.12g}, K_hat={res.K_hat:.12g}")
            reports.append(rep.finish(extra_ok=res.ok))
    return reports


@click.group()
def main():
    """Distributed optimization over random state-dependent networks."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(dir_okay=False), help="scenario TOML file")
_seed_opt = click.option("--seed", type=int, default=None, help="override algo.seed")
_out_opt = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                        help="output directory (default: output.dir from the config)")
_horizon_opt = click.option("--horizon", type=int, default=None, help="override algo.horizon")


@main.command("run")
@_config_opt
@_seed_opt
@_out_opt
@_horizon_opt
@click.option("--dump-mixing", is_flag=True, help="write mixing matrices at recorded steps")
def run_cmd(config_path, seed, out_dir, horizon, dump_mixing):
    """Simulate one scenario and write trajectory CSVs and plots."""
    sc = _load(config_path)
    res = do_run(sc, out_dir or sc.out_dir, seed, horizon, dump_mixing)
    _echo_run(res)


def _echo_run(res):
    traj = res["trajectory_obj"]
    click.echo(f"e_0={traj.error[0]:.6g} e_T={traj.error[-1]:.6g} "
               f"final_mean={np.array2string(traj.final.mean(axis=0), precision=4)} "
               f"target={np.array2string(res['target'], precision=4)}")
    click.echo(f"wrote {res['trajectory']}")


@main.command("check")
@_config_opt
@_seed_opt
@_out_opt
def check_cmd(config_path, seed, out_dir):
    """Run the property checkers enabled in the config; exit 1 if any fails."""
    sc = _load(config_path)
    reports = run_checks(sc, sc.algo.seed if seed is None else seed)
    for r in reports:
        click.echo(str(r))
    path = write_checks_csv(reports, Path(out_dir or sc.out_dir) / "checks.csv")
    click.echo(f"wrote {path}")
    if not all(r.passed for r in reports):
        sys.exit(EXIT_CHECK_FAILED)


@main.command("mc")
@_config_opt
@_seed_opt
@_out_opt
@_horizon_opt
@click.option("--runs", type=int, default=50, show_default=True, help="independent runs R")
def mc_cmd(config_path, seed, out_dir, horizon, runs):
    """Monte-Carlo mean-square error curve over independent seeded runs."""
    sc = _load(config_path)
    if runs < 2:
        click.echo("config error: --runs must be >= 2", err=True)
        sys.exit(EXIT_CONFIG)
    scenario = sc.scenario(seed=seed, horizon=horizon)
    curve = analysis.monte_carlo_mean_square(scenario, runs, scenario.cfg.horizon,
                                             seed=scenario.cfg.seed)
    out = Path(out_dir or sc.out_dir)
    path = write_mean_square_csv(curve, out / "mean_square.csv")
    if sc.plots:
        from .plotting import plot_mean_square_csv
        plot_mean_square_csv(path, out)
    click.echo(f"E|x_0-x*|^2={curve.mean[0]:.6g} E|x_T-x*|^2={curve.mean[-1]:.6g} runs={runs}")
    click.echo(f"wrote {path}")


@main.command("example1")
@click.option("--variant", type=click.Choice(["cucker", "log"]), default="cucker",
              show_default=True, help="link weight form")
@_seed_opt
@_out_opt
@_horizon_opt
@click.option("--dump-mixing", is_flag=True, help="write mixing matrices at recorded steps")
def example1_cmd(variant, seed, out_dir, horizon, dump_mixing):
    """Reproduce the 20-robot warehouse example."""
    name = "example1" if variant == "cucker" else "example1_log"
    sc = _load(bundled_config(name))
    res = do_run(sc, out_dir or sc.out_dir, seed, horizon, dump_mixing)
    _echo_run(res)


if __name__ == "__main__":
    main()
