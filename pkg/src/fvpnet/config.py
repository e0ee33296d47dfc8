"""TOML scenario files: parsing, validation and scenario construction.

All problems in a file are collected and reported together, each tagged with the
line where the offending key lives (or the table header when a key is missing).
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .algorithm import AlgorithmConfig, Scenario, initial_positions_example1
from .graph import (GraphSet, IidCategorical, MarkovChain, MinOccurrenceDependency,
                    PerLinkBernoulli, Topology, build_topology, single_link_graph_set)
from .objective import Objective, QuadraticForm, QuadraticObjective
from .weights import (Constant, CuckerSmale, LogDistance, WeightModel, WeightModelError,
                      validate_model)

DATA_DIR = Path(__file__).parent / "data"

CHECK_NAMES = ("quasi_nonexpansive", "lemma4", "doubly_stochastic", "norm_bound",
               "connectivity", "contraction", "occurrence", "probe")

SCHEMA = {
    "topology": {"kind": str, "m": int, "edges": list, "directed": bool},
    "process": {"kind": str, "p_fail": float, "window": int, "emit": str,
                "probabilities": list, "transition": list, "initial": list, "graph_set": str},
    "weight": {"kind": str, "Q": float, "sigma": float, "beta_w": float, "c": float},
    "objective": {"kind": str, "anchors": str, "scale": float, "hessian": list,
                  "rho": float, "K": float},
    "initial": {"kind": str, "radius": float, "divisions": int, "path": str},
    "algo": {"eta": float, "beta": float, "zeta": float, "horizon": int, "seed": int,
             "record_every": int},
    "checks": {"enabled": list, "samples": int, "state_samples": int, "steps": int,
               "eta_values": list},
    "output": {"dir": str, "plots": bool, "states": bool},
}
REQUIRED = {
    "topology": ("kind", "m"),
    "process": ("kind",),
    "weight": ("kind",),
    "objective": ("kind",),
    "algo": ("eta", "beta", "horizon", "seed"),
}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("\n".join(problems))


@dataclass
class ScenarioConfig:
    path: Path | None
    raw: dict
    topology: Topology
    graph_set: GraphSet
    process_factory: object
    model: WeightModel
    objective: Objective
    algo: AlgorithmConfig
    x0: np.ndarray
    checks: list[str] = field(default_factory=list)
    check_samples: int = 1000
    state_samples: int = 100
    check_steps: int = 10_000
    eta_values: list[float] = field(default_factory=list)
    out_dir: Path = Path("out")
    plots: bool = True
    states: bool = True

    def scenario(self, seed: int | None = None, horizon: int | None = None) -> Scenario:
        cfg = self.algo
        if seed is not None or horizon is not None:
            cfg = AlgorithmConfig(cfg.eta, cfg.beta, cfg.zeta,
                                  cfg.horizon if horizon is None else horizon,
                                  cfg.seed if seed is None else seed, cfg.record_every)
        return Scenario(self.topology, self.process_factory, self.model, self.objective,
                        cfg, self.x0)


class _Lines:
    """Maps ``table.key`` to the line number where it appears in the source text."""

    def __init__(self, text: str):
        self.keys: dict[str, int] = {}
        self.tables: dict[str, int] = {}
        table = ""
        for no, line in enumerate(text.splitlines(), 1):
            s = line.strip()
            head = re.match(r"^\[([^\]]+)\]", s)
            if head:
                table = head.group(1).strip()
                self.tables[table] = no
                continue
            kv = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=", s)
            if kv:
                self.keys[f"{table}.{kv.group(1)}"] = no

    def where(self, table: str, key: str | None = None) -> str:
        if key is not None and f"{table}.{key}" in self.keys:
            return f"line {self.keys[f'{table}.{key}']}"
        if table in self.tables:
            return f"line {self.tables[table]}"
        return "top level"


def _type_ok(value, typ) -> bool:
    if typ is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if typ is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, typ)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(), base=path.parent, path=path)


def bundled_config(name: str = "example1") -> Path:
    return DATA_DIR / f"{name}.toml"


def parse_config(text: str, base: Path | None = None, path: Path | None = None) -> ScenarioConfig:
    lines = _Lines(text)
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path or '<config>'}: {exc}"]) from None
    problems: list[str] = []

    def bad(table, key, msg):
        problems.append(f"{lines.where(table, key)}: {table}.{key}: {msg}" if key
                        else f"{lines.where(table)}: [{table}]: {msg}")

    for table, body in raw.items():
        if table not in SCHEMA:
            bad(table, None, "unknown table")
            continue
        if not isinstance(body, dict):
            bad(table, None, "expected a table")
            continue
        for key, value in body.items():
            if key not in SCHEMA[table]:
                bad(table, key, "unknown key")
            elif not _type_ok(value, SCHEMA[table][key]):
                bad(table, key, f"expected {SCHEMA[table][key].__name__}, "
                                f"got {type(value).__name__}")
    for table, keys in REQUIRED.items():
        for key in keys:
            if key not in raw.get(table, {}):
                bad(table, key, "missing required key")
    if problems:
        raise ConfigError(problems)

    base = base or Path(".")
    top_c, proc_c, w_c = raw["topology"], raw["process"], raw["weight"]
    obj_c, algo_c = raw["objective"], raw["algo"]
    init_c = raw.get("initial", {"kind": "circle"})
    checks_c = raw.get("checks", {})
    out_c = raw.get("output", {})

    topology = None
    try:
        topology = build_topology(top_c["kind"], top_c["m"], top_c.get("edges"),
                                  top_c.get("directed", False))
    except (ValueError, TypeError) as exc:
        bad("topology", "kind", str(exc))

    model = None
    try:
        kind = w_c["kind"]
        if kind == "cucker_smale":
            model = CuckerSmale(w_c.get("Q", 0.25), w_c.get("sigma", 1.0), w_c.get("beta_w", 1.0))
        elif kind == "log_distance":
            model = LogDistance(w_c.get("Q", 0.25))
        elif kind == "constant":
            model = Constant(w_c.get("c", 0.25))
        else:
            bad("weight", "kind", f"unknown weight model {kind!r}")
    except WeightModelError as exc:
        bad("weight", "kind", str(exc))
    if model is not None and topology is not None:
        try:
            validate_model(model, topology)
        except WeightModelError as exc:
            bad("weight", "Q" if "Q" in w_c else "kind", str(exc))

    x0 = None
    if topology is not None:
        try:
            ikind = init_c.get("kind", "circle")
            if ikind == "circle":
                x0 = initial_positions_example1(topology.m, init_c.get("radius", 10.0),
                                                init_c.get("divisions", 22))
            elif ikind == "csv":
                x0 = read_matrix_csv(base / init_c["path"])
            else:
                bad("initial", "kind", f"unknown initial layout {ikind!r}")
        except (OSError, KeyError, ValueError) as exc:
            bad("initial", "path", str(exc))
    if x0 is not None and topology is not None and x0.shape[0] != topology.m:
        bad("initial", "path", f"{x0.shape[0]} rows, expected {topology.m}")
        x0 = None

    objective = None
    if x0 is not None:
        try:
            src = obj_c.get("anchors", "from_initial_positions")
            anchors = x0.copy() if src == "from_initial_positions" else read_matrix_csv(base / src)
            if anchors.shape != x0.shape:
                bad("objective", "anchors", f"anchor shape {anchors.shape} != state shape {x0.shape}")
            elif obj_c["kind"] == "quadratic":
                objective = QuadraticObjective(anchors, obj_c.get("scale", 1.0))
            elif obj_c["kind"] == "custom":
                if not all(k in obj_c for k in ("hessian", "rho", "K")):
                    bad("objective", "kind", "custom objectives need hessian, rho and K")
                else:
                    objective = QuadraticForm(anchors, obj_c["hessian"], obj_c["rho"], obj_c["K"])
            else:
                bad("objective", "kind", f"unknown objective {obj_c['kind']!r}")
        except (OSError, ValueError) as exc:
            bad("objective", "anchors", str(exc))

    zeta = algo_c.get("zeta", 1.0)
    algo = AlgorithmConfig(float(algo_c["eta"]), float(algo_c["beta"]), float(zeta),
                           algo_c["horizon"], algo_c["seed"], algo_c.get("record_every", 10))
    if not 0 < algo.eta < 1:
        bad("algo", "eta", f"must lie in (0, 1), got {algo.eta}")
    if objective is not None and not 0 < algo.beta < 2.0 / objective.K:
        bad("algo", "beta", f"{algo.beta} outside (0, 2/K) = (0, {2.0 / objective.K:g}) "
                            f"for K={objective.K:g}")
    if not 0 < algo.zeta <= 1:
        bad("algo", "zeta", f"must lie in (0, 1], got {algo.zeta}")
    if algo.horizon < 0:
        bad("algo", "horizon", "must be >= 0")
    if algo.record_every < 1:
        bad("algo", "record_every", "must be >= 1")

    graph_set = factory = None
    if topology is not None:
        graph_set, factory = _process(proc_c, topology, bad)

    checks = checks_c.get("enabled", list(CHECK_NAMES))
    for name in checks:
        if name not in CHECK_NAMES:
            bad("checks", "enabled", f"unknown check {name!r}")

    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(
        path=path, raw=raw, topology=topology, graph_set=graph_set, process_factory=factory,
        model=model, objective=objective, algo=algo, x0=x0, checks=list(checks),
        check_samples=checks_c.get("samples", 1000),
        state_samples=checks_c.get("state_samples", 100),
        check_steps=checks_c.get("steps", 10_000),
        eta_values=[float(e) for e in checks_c.get("eta_values", [algo.eta])],
        out_dir=Path(out_c.get("dir", "out")), plots=out_c.get("plots", True),
        states=out_c.get("states", True))


def _process(proc_c, topology, bad):
    kind = proc_c["kind"]
    try:
        if proc_c.get("graph_set", "single_link") != "single_link":
            bad("process", "graph_set", "only 'single_link' graph sets can be declared")
            return None, None
        graph_set = single_link_graph_set(topology)
        if kind == "min_occurrence":
            factory = partial(_min_occurrence, topology, proc_c.get("p_fail", 0.5),
                              proc_c.get("window", 20), proc_c.get("emit", "subset"))
        elif kind == "bernoulli":
            factory = partial(_bernoulli, topology, proc_c.get("p_fail", 0.5))
        elif kind == "iid":
            factory = partial(_iid, graph_set, proc_c.get("probabilities"))
        elif kind == "markov":
            if "transition" not in proc_c:
                bad("process", "transition", "markov process needs a transition matrix")
                return graph_set, None
            factory = partial(_markov, graph_set, proc_c["transition"], proc_c.get("initial"))
        else:
            bad("process", "kind", f"unknown process {kind!r}")
            return graph_set, None
        factory(0)  # validates parameters
        return graph_set, factory
    except ValueError as exc:
        bad("process", "kind", str(exc))
        return None, None


def _min_occurrence(topology, p_fail, window, emit, seed):
    return MinOccurrenceDependency(topology, p_fail, window, seed, emit)


def _bernoulli(topology, p_fail, seed):
    return PerLinkBernoulli(topology, p_fail, seed)


def _iid(graph_set, probabilities, seed):
    return IidCategorical(graph_set, probabilities, seed)


def _markov(graph_set, transition, initial, seed):
    return MarkovChain(graph_set, transition, initial, seed)


def read_matrix_csv(path) -> np.ndarray:
    """Rows of numbers, one agent per row; ``#`` lines are skipped."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=float)
