"""Runtime checkers for the operator properties the convergence argument relies on,
consensus-subspace geometry, and Monte-Carlo mean-square estimates.

Every checker samples random states (isotropic Gaussian, default scale 10) and
returns a :class:`CheckReport`; none of them raise on a violated property.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algorithm import Scenario, run
from .graph import GraphProcess, GraphSet, GraphSample, occurrence_counts, union_graph
from .linalg import jacobi_eigenvalues
from .objective import Objective
from .weights import (DS_TOL, WeightModel, WeightModelError, apply_T, apply_T_hat,
                      build_mixing_matrix, spectral_norm)

TOL = 1e-12
EIG_TOL = 1e-9


# consensus subspace

def project_consensus(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.broadcast_to(x.mean(axis=0), x.shape).copy()


def in_consensus(x, tol: float = 0.0) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(np.abs(x - x[0]) <= tol))


def distance_to_consensus(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - project_consensus(x)))


def consensus_error(x, s_star) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - np.asarray(s_star, dtype=float).reshape(1, -1)))


def fixed_point_residual(x, sample: GraphSample, model: WeightModel) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float) - apply_T(sample, model, x)))


@dataclass
class CheckReport:
    name: str
    samples: int = 0
    violations: int = 0
    worst_margin: float = math.inf
    tol: float = TOL
    detail: str = ""
    stats: dict = field(default_factory=dict)
    passed: bool | None = None

    def record(self, margin: float) -> None:
        """``margin >= -tol`` is a pass; the smallest margin seen is kept."""
        self.samples += 1
        self.worst_margin = min(self.worst_margin, margin)
        if margin < -self.tol:
            self.violations += 1

    def finish(self, extra_ok: bool = True) -> CheckReport:
        self.passed = self.violations == 0 and extra_ok
        return self

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        s = (f"{status} {self.name}: samples={self.samples} violations={self.violations} "
             f"worst_margin={self.worst_margin:.3e}")
        if self.detail:
            s += f" ({self.detail})"
        return s

    def csv_row(self) -> list:
        return [self.name, self.samples, self.violations, repr(self.worst_margin), self.tol,
                int(bool(self.passed)), self.detail]


def _random_pair(rng, m, n, scale):
    x = rng.normal(0.0, scale, size=(m, n))
    z = np.tile(rng.normal(0.0, scale, size=n), (m, 1))
    return x, z


def _random_graph(rng, graph_set: GraphSet, t=0) -> GraphSample:
    k = int(rng.integers(len(graph_set)))
    return GraphSample(graph_set.topology, graph_set.mask(k), t, k)


def check_quasi_nonexpansive(model: WeightModel, graph_set: GraphSet, sample_count: int,
                             rng: np.random.Generator, n: int = 2, scale: float = 10.0,
                             tol: float = TOL) -> CheckReport:
    """``|T(w, x) - z| <= |x - z|`` for random x, z in the consensus subspace and graphs."""
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rep = CheckReport("quasi_nonexpansive", tol=tol)
    m = graph_set.topology.m
    for _ in range(sample_count):
        x, z = _random_pair(rng, m, n, scale)
        g = _random_graph(rng, graph_set)
        rep.record(np.linalg.norm(x - z) - np.linalg.norm(apply_T(g, model, x) - z))
    return rep.finish()


def lemma4_margins(model: WeightModel, sample: GraphSample, eta: float, x, z):
    """Slack of the three averaged-operator properties at one ``(x, z, sample)``.

    Returns ``(i, ii, iii)``; each is >= 0 when the property holds:
    (i) ``-max(|z - That z|, ||x - That x| - eta |x - T x||)``,
    (ii) ``<x - That x, x - z> - eta/2 |x - T x|^2``,
    (iii) ``|x - z| - |That x - z|``.
    """
    Tx = apply_T(sample, model, x)
    Th = apply_T_hat(eta, sample, model, x)
    m1 = -max(np.linalg.norm(z - apply_T_hat(eta, sample, model, z)),
              abs(np.linalg.norm(x - Th) - eta * np.linalg.norm(x - Tx)))
    m2 = float(np.sum((x - Th) * (x - z))) - 0.5 * eta * float(np.sum((x - Tx) ** 2))
    m3 = float(np.linalg.norm(x - z) - np.linalg.norm(Th - z))
    return float(m1), m2, m3


def check_lemma4(model: WeightModel, graph_set: GraphSet, eta: float, sample_count: int,
                 rng: np.random.Generator, n: int = 2, scale: float = 10.0,
                 tol: float = TOL) -> CheckReport:
    """Properties of the averaged operator ``(1 - eta) x + eta T(w, x)``.

    (i) consensus points are fixed by it, and it moves any x by exactly eta times
    what T does (so both share their fixed points); (ii)
    ``<x - That x, x - z> >= eta/2 |x - T x|^2``; (iii) it is quasi-nonexpansive.
    Violation counts per part are in ``stats``.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    m = graph_set.topology.m
    rep = CheckReport(f"lemma4[eta={eta:g}]", tol=tol)
    parts = {"i": 0, "ii": 0, "iii": 0}
    for _ in range(sample_count):
        x, z = _random_pair(rng, m, n, scale)
        g = _random_graph(rng, graph_set)
        margins = lemma4_margins(model, g, eta, x, z)
        for key, mg in zip(parts, margins):
            if mg < -tol:
                parts[key] += 1
        rep.record(min(margins))
    rep.stats.update({f"violations_{k}": v for k, v in parts.items()})
    return rep.finish()


def check_doubly_stochastic(model: WeightModel, graph_set: GraphSet, sample_count: int,
                            rng: np.random.Generator, n: int = 2, scale: float = 10.0,
                            tol: float = DS_TOL) -> CheckReport:
    """Row/column sums and entry range of W for every graph at each sampled state.

    Also requires ``|W|_2 <= sqrt(|W|_1 |W|_inf) <= 1`` to within 1e-10; the
    largest observed ``|W|_2`` is in ``stats["max_norm2"]``.
    """
    rep = CheckReport("doubly_stochastic", tol=tol)
    m = graph_set.topology.m
    worst_norm = 0.0
    worst_bound_gap = math.inf
    for _ in range(max(sample_count, 1)):
        x = rng.normal(0.0, scale, size=(m, n))
        for k in range(len(graph_set)):
            g = GraphSample(graph_set.topology, graph_set.mask(k), 0, k)
            try:
                W = build_mixing_matrix(g, model, x)
            except WeightModelError as exc:
                rep.samples += 1
                rep.violations += 1
                rep.worst_margin = -math.inf
                rep.detail = f"construction error: {exc}"
                return rep.finish()
            dev = max(np.abs(W.sum(axis=0) - 1).max(), np.abs(W.sum(axis=1) - 1).max(),
                      max(0.0, -W.min()), max(0.0, W.max() - 1.0))
            rep.record(-dev)
            nrm = spectral_norm(W)
            bound = math.sqrt(np.abs(W).sum(axis=0).max() * np.abs(W).sum(axis=1).max())
            worst_norm = max(worst_norm, nrm)
            worst_bound_gap = min(worst_bound_gap, bound - nrm)
    rep.stats.update(max_norm2=worst_norm, min_bound_gap=worst_bound_gap)
    rep.detail = f"max |W|_2={worst_norm:.15g}"
    return rep.finish(extra_ok=worst_norm <= 1 + 1e-10 and worst_bound_gap >= -1e-10)


def check_norm_bound(model: WeightModel, graph_set: GraphSet, sample_count: int,
                     rng: np.random.Generator, n: int = 2, scale: float = 10.0,
                     tol: float = 1e-10) -> CheckReport:
    """``|W|_2 <= sqrt(|W|_1 |W|_inf) <= 1`` with the 2-norm from power iteration."""
    rep = CheckReport("norm_bound", tol=tol)
    m = graph_set.topology.m
    for _ in range(sample_count):
        x = rng.normal(0.0, scale, size=(m, n))
        g = _random_graph(rng, graph_set)
        W = build_mixing_matrix(g, model, x)
        nrm = spectral_norm(W)
        bound = math.sqrt(np.abs(W).sum(axis=0).max() * np.abs(W).sum(axis=1).max())
        rep.record(min(bound - nrm, 1.0 - nrm))
    return rep.finish()


def summed_laplacian(graph_set: GraphSet, model: WeightModel, x) -> np.ndarray:
    """``sum over graphs of (I - W(w, x))``."""
    m = graph_set.topology.m
    L = np.zeros((m, m))
    for k in range(len(graph_set)):
        g = GraphSample(graph_set.topology, graph_set.mask(k), 0, k)
        L += np.eye(m) - build_mixing_matrix(g, model, x)
    return L


def algebraic_connectivity(graph_set: GraphSet, model: WeightModel, x) -> float:
    """Second-smallest eigenvalue (Jacobi) of the summed Laplacian; symmetric models only."""
    if not model.symmetric or graph_set.directed:
        raise ValueError("spectral connectivity check needs a symmetric weight model")
    if graph_set.topology.m < 2:
        return math.inf
    return float(jacobi_eigenvalues(summed_laplacian(graph_set, model, x))[1])


def check_union_connectivity(graph_set: GraphSet, model: WeightModel | None, state_samples: int,
                             rng: np.random.Generator, n: int = 2, scale: float = 10.0,
                             tol: float = EIG_TOL) -> CheckReport:
    """Union of the graph set is (strongly) connected, combinatorially and spectrally.

    ``stats`` holds ``combinatorial`` (bool) and ``min_lambda2``. The spectral part
    is skipped when ``model`` is None.
    """
    rep = CheckReport("union_connectivity", tol=tol)
    m = graph_set.topology.m
    connected = union_graph(graph_set).is_connected()
    rep.stats["combinatorial"] = connected
    if m == 1:
        rep.detail = "single agent: trivially connected"
        rep.worst_margin = 0.0
        return rep.finish()
    lam_min = math.inf
    if model is not None:
        for _ in range(state_samples):
            x = rng.normal(0.0, scale, size=(m, n))
            lam = algebraic_connectivity(graph_set, model, x)
            lam_min = min(lam_min, lam)
            rep.samples += 1
            rep.worst_margin = min(rep.worst_margin, lam - tol)
            rep.violations += lam <= tol
    rep.stats["min_lambda2"] = lam_min
    rep.detail = f"combinatorial={'connected' if connected else 'disconnected'}, min_lambda2={lam_min:.3e}"
    return rep.finish(extra_ok=connected)


def check_contraction(obj: Objective, beta: float, sample_count: int, rng: np.random.Generator,
                      shape: tuple[int, int] | None = None, scale: float = 10.0,
                      exact_constants: bool = True, tol: float = 1e-9) -> CheckReport:
    """Lipschitz ratio of ``H(x) = x - beta grad f(x)`` over random pairs.

    With exact (rho, K) the ratio may not exceed ``max(|1 - beta rho|, |1 - beta K|)``.
    """
    if not 0 < beta < 2.0 / obj.K:
        raise ValueError(f"beta={beta} outside (0, 2/K)")
    if shape is None:
        shape = obj.anchors.shape
    bound = max(abs(1 - beta * obj.rho), abs(1 - beta * obj.K))
    rep = CheckReport(f"contraction[beta={beta:g}]", tol=tol)
    worst = 0.0
    for _ in range(sample_count):
        x = rng.normal(0.0, scale, size=shape)
        y = rng.normal(0.0, scale, size=shape)
        d = np.linalg.norm(x - y)
        if d == 0.0:
            continue
        hx = x - beta * obj.grad(x)
        hy = y - beta * obj.grad(y)
        ratio = float(np.linalg.norm(hx - hy) / d)
        worst = max(worst, ratio)
        rep.record(bound - ratio if exact_constants else 1.0 - ratio)
    rep.stats.update(max_ratio=worst, gamma_hat=1.0 - worst, bound=bound)
    rep.detail = f"max_ratio={worst:.12g}, bound={bound:.12g}"
    return rep.finish()


def check_occurrence(process: GraphProcess, steps: int, graph_set: GraphSet) -> CheckReport:
    """Every graph occurs, and the least-seen count still grows over the second half."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    samples = [process.next_sample(t) for t in range(steps)]
    half = max(1, steps // 2)
    first = occurrence_counts(samples[:half], graph_set)
    full = occurrence_counts(samples, graph_set)
    rep = CheckReport("occurrence", samples=steps, tol=0.0)
    rep.violations = int(np.sum(full.per_graph < 1))
    grows = full.min_graph > first.min_graph
    rep.worst_margin = float(full.min_graph - 1)
    rep.stats.update(min_first_half=first.min_graph, min_total=full.min_graph,
                     per_graph=full.per_graph.tolist(), per_edge=full.per_edge.tolist())
    rep.detail = f"min count {first.min_graph} at half-time, {full.min_graph} at end"
    return rep.finish(extra_ok=grows)


@dataclass
class MeanSquareCurve:
    t: np.ndarray
    mean: np.ndarray
    half_width: np.ndarray
    runs: int

    def at(self, t: int) -> float:
        return float(self.mean[t])


def _squared_errors(args):
    scenario, seed, horizon = args
    traj = run(scenario, seed=seed, horizon=horizon, record_every=max(horizon, 1))
    return traj.error ** 2


def monte_carlo_mean_square(scenario: Scenario, runs: int, horizon: int, seed: int = 0,
                            threads: int | None = None) -> MeanSquareCurve:
    """Mean of ``|x_t - x*|^2`` over ``runs`` independent seeded runs with 95% half-widths.

    Run r is seeded by the r-th child of ``SeedSequence(seed)``; results are
    gathered in run order and summed with ``math.fsum``, so the curve does not
    depend on ``threads`` (default: ``$FVPNET_THREADS`` or 1).
    """
    if runs < 2:
        raise ValueError("need at least 2 runs")
    if threads is None:
        threads = int(os.environ.get("FVPNET_THREADS", "1"))
    children = np.random.SeedSequence(seed).spawn(runs)
    jobs = [(scenario, child, horizon) for child in children]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            sq = list(pool.map(_squared_errors, jobs))
    else:
        sq = [_squared_errors(j) for j in jobs]
    data = np.vstack(sq)
    mean = np.array([math.fsum(col) / runs for col in data.T])
    dev = data - mean
    var = np.array([math.fsum(col) / (runs - 1) for col in (dev * dev).T])
    half = 1.96 * np.sqrt(var) / math.sqrt(runs)
    return MeanSquareCurve(np.arange(horizon + 1), mean, half, runs)
