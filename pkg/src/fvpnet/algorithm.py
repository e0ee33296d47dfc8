"""Diminishing-step gradient iteration over random, state-dependent mixing.

Per step::

    x_{t+1} = a_t (x_t - beta grad f(x_t)) + (1 - a_t) ((1 - eta) x_t + eta W(w_t, x_t) x_t)

with ``a_t = 1 / (1 + t) ** zeta``. :func:`iterate` evaluates it agent by agent
from neighbour states; :func:`iterate_dense` uses the stacked Kronecker matrix and
exists only to cross-check the local form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graph import GraphProcess, GraphSample, Topology
from .objective import Objective, analytic_consensus_minimizer
from .weights import WeightModel, apply_T, build_mixing_matrix, validate_model


@dataclass(frozen=True)
class AlgorithmConfig:
    eta: float
    beta: float
    zeta: float | None = 1.0
    horizon: int = 1000
    seed: int = 0
    record_every: int = 10

    def validate(self, K: float) -> None:
        """``zeta=None`` selects pure mixing (a_t = 0) for diagnostics."""
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not 0 < self.beta < 2.0 / K:
            raise ValueError(f"beta={self.beta} outside (0, 2/K) = (0, {2.0 / K:g})")
        if self.zeta is not None and not 0 < self.zeta <= 1:
            raise ValueError(f"zeta must lie in (0, 1], got {self.zeta}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


def step_size(zeta: float | None, t: int) -> float:
    if zeta is None:
        return 0.0
    return 1.0 / (1.0 + t) ** zeta


def iterate(x, t: int, cfg: AlgorithmConfig, sample: GraphSample, model: WeightModel,
            obj: Objective) -> np.ndarray:
    return _advance(np.asarray(x, dtype=float), step_size(cfg.zeta, t), cfg, sample, model, obj)[0]


def _advance(x, alpha, cfg, sample, model, obj):
    Tx = apply_T(sample, model, x)
    mixed = x + cfg.eta * (Tx - x)
    # written so that a common fixed point of both terms is reproduced exactly
    x_next = mixed + alpha * ((x - cfg.beta * obj.grad(x)) - mixed)
    if not np.all(np.isfinite(x_next)):
        raise FloatingPointError(f"non-finite iterate at step {sample.t}")
    return x_next, Tx


def iterate_dense(x, t: int, cfg: AlgorithmConfig, sample: GraphSample, model: WeightModel,
                  obj: Objective) -> np.ndarray:
    """Same update on the stacked vector with ``W kron I_n`` materialized."""
    x = np.asarray(x, dtype=float)
    m, n = x.shape
    W = np.kron(build_mixing_matrix(sample, model, x), np.eye(n))
    v = x.ravel()
    alpha = step_size(cfg.zeta, t)
    g = obj.grad(x).ravel()
    t_hat = (1 - cfg.eta) * v + cfg.eta * (W @ v)
    return (alpha * (v - cfg.beta * g) + (1 - alpha) * t_hat).reshape(m, n)


@dataclass
class Scenario:
    topology: Topology
    process_factory: Callable[[object], GraphProcess]
    model: WeightModel
    objective: Objective
    cfg: AlgorithmConfig
    x0: np.ndarray
    target: np.ndarray | None = None

    def __post_init__(self):
        self.x0 = np.atleast_2d(np.asarray(self.x0, dtype=float))
        if self.x0.shape[0] != self.topology.m:
            raise ValueError(f"x0 has {self.x0.shape[0]} agents, topology has {self.topology.m}")
        if not np.all(np.isfinite(self.x0)):
            raise ValueError("x0 must be finite")
        shape = getattr(self.objective, "shape", None)
        if shape is not None and tuple(shape) != self.x0.shape:
            raise ValueError(f"objective expects states of shape {shape}, x0 is {self.x0.shape}")
        validate_model(self.model, self.topology)
        self.cfg.validate(self.objective.K)
        if self.target is None:
            self.target = analytic_consensus_minimizer(self.objective)
        self.target = np.asarray(self.target, dtype=float).reshape(-1)

    @property
    def x_star(self) -> np.ndarray:
        return np.tile(self.target, (self.topology.m, 1))


@dataclass
class Trajectory:
    """Per-step metrics (``horizon + 1`` rows) and thinned full states."""

    t: np.ndarray
    alpha: np.ndarray
    error: np.ndarray
    residual: np.ndarray
    f_mean: np.ndarray
    masks: list[str]
    state_steps: list[int] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    final: np.ndarray | None = None
    seed: object = None

    def __len__(self):
        return len(self.t)


def run(scenario: Scenario, seed=None, horizon: int | None = None,
        record_every: int | None = None, on_step: Callable | None = None) -> Trajectory:
    """Simulate ``horizon`` steps; identical scenario and seed give identical output.

    A graph is drawn for the terminal record as well so that its residual is
    defined; it is never applied.
    """
    cfg = scenario.cfg
    seed = cfg.seed if seed is None else seed
    horizon = cfg.horizon if horizon is None else horizon
    every = cfg.record_every if record_every is None else record_every
    process = scenario.process_factory(seed)
    obj, model = scenario.objective, scenario.model
    x_star = scenario.x_star
    m = scenario.topology.m

    x = scenario.x0.copy()
    ts = np.arange(horizon + 1)
    alpha = np.empty(horizon + 1)
    err = np.empty(horizon + 1)
    res = np.empty(horizon + 1)
    fm = np.empty(horizon + 1)
    masks: list[str] = []
    steps, states = [], []
    for t in range(horizon + 1):
        sample = process.next_sample(t)
        a = step_size(cfg.zeta, t)
        if t < horizon:
            x_next, Tx = _advance(x, a, cfg, sample, model, obj)
        else:
            x_next, Tx = x, apply_T(sample, model, x)
        alpha[t] = a
        err[t] = math.sqrt(float(np.sum((x - x_star) ** 2)))
        res[t] = math.sqrt(float(np.sum((x - Tx) ** 2)))
        fm[t] = obj.value(np.tile(x.mean(axis=0), (m, 1)))
        masks.append(sample.hex_mask())
        if t % every == 0 or t == horizon:
            steps.append(t)
            states.append(x.copy())
        if on_step is not None:
            on_step(t, x, sample)
        x = x_next
    return Trajectory(ts, alpha, err, res, fm, masks, steps, states, x.copy(), seed)


def initial_positions_example1(m: int = 20, radius: float = 10.0, divisions: int = 22) -> np.ndarray:
    """Agent i (1-based) at ``radius * (cos, sin)((i - 1) 2 pi / divisions)``."""
    theta = np.arange(m) * 2.0 * np.pi / divisions
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
