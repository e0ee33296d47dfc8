"""Topologies, finite graph sets and the random processes that pick a graph per step.

Vertices and edges are 0-based. A realized graph is stored as a boolean mask over
the edge list of the underlying :class:`Topology`, so every process (i.i.d.,
Markov, per-link Bernoulli, minimum-occurrence dependency) emits the same type.

Every process owns a ``numpy.random.Generator`` backed by PCG64 and seeded through
``numpy.random.SeedSequence``; see :func:`make_rng`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-12


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator for ``seed`` (int or ``SeedSequence``).

    Independent substreams (one per Monte-Carlo run) are obtained with
    ``SeedSequence(seed).spawn(R)``; the r-th child seeds run r.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True)
class Topology:
    m: int
    edges: tuple[tuple[int, int], ...]
    directed: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"agent count must be >= 1, got {self.m}")
        seen = set()
        for i, j in self.edges:
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ValueError(f"edge ({i}, {j}) has a vertex outside 0..{self.m - 1}")
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) is not allowed")
            key = (i, j) if self.directed else (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add(key)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def src(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges], dtype=np.intp)

    @cached_property
    def dst(self) -> np.ndarray:
        return np.array([e[1] for e in self.edges], dtype=np.intp)

    def degrees(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Number of (active) incident edges per vertex; in-plus-out for directed graphs."""
        deg = np.zeros(self.m, dtype=np.int64)
        for k, (i, j) in enumerate(self.edges):
            if mask is None or mask[k]:
                deg[i] += 1
                deg[j] += 1
        return deg

    @cached_property
    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.edges else 0

    def edge_index(self, edge: tuple[int, int]) -> int:
        i, j = edge
        for k, (a, b) in enumerate(self.edges):
            if (a, b) == (i, j) or (not self.directed and (b, a) == (i, j)):
                return k
        raise KeyError(f"edge {edge} not in topology")

    def is_connected(self) -> bool:
        """Connectivity for undirected topologies, strong connectivity for directed ones."""
        if self.m == 1:
            return True
        fwd = [[] for _ in range(self.m)]
        bwd = [[] for _ in range(self.m)]
        for i, j in self.edges:
            fwd[i].append(j)
            bwd[j].append(i)
            if not self.directed:
                fwd[j].append(i)
                bwd[i].append(j)

        def reach(adj):
            seen = {0}
            stack = [0]
            while stack:
                v = stack.pop()
                for w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            return len(seen)

        return reach(fwd) == self.m and reach(bwd) == self.m


def build_topology(kind: str, m: int, edges: Iterable[Sequence[int]] | None = None,
                   directed: bool = False) -> Topology:
    """Canonical topology of the given kind: ``line``, ``ring``, ``complete`` or ``custom``."""
    if m < 1:
        raise ValueError(f"agent count must be >= 1, got {m}")
    if kind == "line":
        e = [(i, i + 1) for i in range(m - 1)]
    elif kind == "ring":
        e = [(i, i + 1) for i in range(m - 1)]
        if m > 2:
            e.append((m - 1, 0))
    elif kind == "complete":
        e = [(i, j) for i in range(m) for j in range(i + 1, m)]
    elif kind == "custom":
        if edges is None:
            raise ValueError("custom topology needs an edge list")
        e = [(int(a), int(b)) for a, b in edges]
    else:
        raise ValueError(f"unknown topology kind {kind!r}")
    return Topology(m, tuple(e), directed)


@dataclass(frozen=True)
class GraphSet:
    """Ordered finite set of graphs, each an edge subset (indices) of ``topology``."""

    topology: Topology
    graphs: tuple[frozenset[int], ...]

    def __post_init__(self):
        if not self.graphs:
            raise ValueError("graph set must be nonempty")
        for g in self.graphs:
            if any(not 0 <= k < self.topology.n_edges for k in g):
                raise ValueError("graph references an edge outside the topology")

    @property
    def directed(self) -> bool:
        return self.topology.directed

    def __len__(self) -> int:
        return len(self.graphs)

    def mask(self, index: int) -> np.ndarray:
        out = np.zeros(self.topology.n_edges, dtype=bool)
        out[list(self.graphs[index])] = True
        return out

    def without_edge(self, edge: tuple[int, int]) -> GraphSet:
        k = self.topology.edge_index(edge)
        return GraphSet(self.topology, tuple(g - {k} for g in self.graphs))


def single_link_graph_set(topology: Topology) -> GraphSet:
    if topology.n_edges == 0:
        raise ValueError("topology has no edges")
    return GraphSet(topology, tuple(frozenset({k}) for k in range(topology.n_edges)))


def union_graph(graph_set: GraphSet) -> Topology:
    top = graph_set.topology
    keep = sorted(set().union(*graph_set.graphs))
    return Topology(top.m, tuple(top.edges[k] for k in keep), top.directed)


@dataclass(frozen=True, eq=False)
class GraphSample:
    """The graph realized at step ``t``; an all-false mask means no communication."""

    topology: Topology
    active: np.ndarray
    t: int = 0
    graph_index: int | None = None

    @property
    def active_edges(self) -> list[tuple[int, int]]:
        return [self.topology.edges[k] for k in np.flatnonzero(self.active)]

    def hex_mask(self) -> str:
        """Bit k set iff edge k is active."""
        value = 0
        for k in np.flatnonzero(self.active):
            value |= 1 << int(k)
        return format(value, "x")

    @classmethod
    def from_hex(cls, topology: Topology, text: str, t: int = 0) -> GraphSample:
        value = int(text, 16)
        active = np.array([(value >> k) & 1 for k in range(topology.n_edges)], dtype=bool)
        return cls(topology, active, t)


def empty_sample(topology: Topology, t: int = 0) -> GraphSample:
    return GraphSample(topology, np.zeros(topology.n_edges, dtype=bool), t)


def _check_distribution(p, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"{name} must be nonnegative and sum to 1")
    return p


class GraphProcess:
    """Base class. Processes are stateful and single-owner; build one per run."""

    topology: Topology

    def next_sample(self, t: int) -> GraphSample:
        raise NotImplementedError

    def samples(self, steps: int) -> list[GraphSample]:
        return [self.next_sample(t) for t in range(steps)]


class IidCategorical(GraphProcess):
    def __init__(self, graph_set: GraphSet, probabilities=None, seed=0):
        self.graph_set = graph_set
        self.topology = graph_set.topology
        if probabilities is None:
            probabilities = np.full(len(graph_set), 1.0 / len(graph_set))
        self.probabilities = _check_distribution(probabilities, "probabilities")
        if len(self.probabilities) != len(graph_set):
            raise ValueError("one probability per graph is required")
        self.rng = make_rng(seed)
        self._cdf = np.cumsum(self.probabilities)

    def next_sample(self, t: int) -> GraphSample:
        idx = int(np.searchsorted(self._cdf, self.rng.random() * self._cdf[-1], side="right"))
        idx = min(idx, len(self.graph_set) - 1)
        return GraphSample(self.topology, self.graph_set.mask(idx), t, idx)


class MarkovChain(GraphProcess):
    def __init__(self, graph_set: GraphSet, transition, initial=None, seed=0):
        self.graph_set = graph_set
        self.topology = graph_set.topology
        P = np.asarray(transition, dtype=float)
        N = len(graph_set)
        if P.shape != (N, N):
            raise ValueError(f"transition matrix must be {N}x{N}")
        for row in P:
            _check_distribution(row, "transition rows")
        self.transition = P
        self.initial = (stationary_distribution(P) if initial is None
                        else _check_distribution(initial, "initial distribution"))
        self.rng = make_rng(seed)
        self.state: int | None = None

    def _draw(self, p) -> int:
        cdf = np.cumsum(p)
        return min(int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right")),
                   len(p) - 1)

    def next_sample(self, t: int) -> GraphSample:
        if self.state is None:
            self.state = self._draw(self.initial)
        else:
            self.state = self._draw(self.transition[self.state])
        return GraphSample(self.topology, self.graph_set.mask(self.state), t, self.state)


def stationary_distribution(P) -> np.ndarray:
    """Left Perron vector of a row-stochastic matrix (assumes it is unique)."""
    P = np.asarray(P, dtype=float)
    N = P.shape[0]
    A = np.vstack([P.T - np.eye(N), np.ones(N)])
    b = np.zeros(N + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


class PerLinkBernoulli(GraphProcess):
    """Each edge independently active with probability ``1 - p_fail``."""

    def __init__(self, topology: Topology, p_fail: float, seed=0):
        if not 0.0 <= p_fail <= 1.0:
            raise ValueError("p_fail must lie in [0, 1]")
        self.topology = topology
        self.p_fail = float(p_fail)
        self.rng = make_rng(seed)

    def _bernoulli_mask(self) -> np.ndarray:
        return self.rng.random(self.topology.n_edges) >= self.p_fail

    def next_sample(self, t: int) -> GraphSample:
        return GraphSample(self.topology, self._bernoulli_mask(), t)


class MinOccurrenceDependency(PerLinkBernoulli):
    """Per-link Bernoulli with a forced step every ``window`` iterations.

    At ``t = k * window`` (k >= 1) the Bernoulli draw is replaced by the single
    edge that was active least often during ``[(k-1) * window, k * window)``; ties
    are broken uniformly with the process RNG. With ``emit="single"`` ordinary
    steps also emit one edge, drawn uniformly among the Bernoulli survivors.
    """

    def __init__(self, topology: Topology, p_fail: float = 0.5, window: int = 20,
                 seed=0, emit: str = "subset"):
        super().__init__(topology, p_fail, seed)
        if window < 1:
            raise ValueError("window must be >= 1")
        if emit not in ("subset", "single"):
            raise ValueError("emit must be 'subset' or 'single'")
        if topology.n_edges == 0:
            raise ValueError("topology has no edges")
        self.window = int(window)
        self.emit = emit
        self.window_counts = np.zeros(topology.n_edges, dtype=np.int64)
        self.total_counts = np.zeros(topology.n_edges, dtype=np.int64)

    def next_sample(self, t: int) -> GraphSample:
        E = self.topology.n_edges
        if t > 0 and t % self.window == 0:
            low = self.window_counts.min()
            tied = np.flatnonzero(self.window_counts == low)
            active = np.zeros(E, dtype=bool)
            active[tied[self.rng.integers(len(tied))]] = True
            self.window_counts[:] = 0
        else:
            active = self._bernoulli_mask()
            if self.emit == "single" and active.any():
                on = np.flatnonzero(active)
                active = np.zeros(E, dtype=bool)
                active[on[self.rng.integers(len(on))]] = True
        self.window_counts += active
        self.total_counts += active
        return GraphSample(self.topology, active, t)


@dataclass
class OccurrenceCounts:
    per_graph: np.ndarray
    per_edge: np.ndarray
    steps: int = 0
    min_graph: int = field(init=False)
    min_edge: int = field(init=False)

    def __post_init__(self):
        self.min_graph = int(self.per_graph.min())
        self.min_edge = int(self.per_edge.min()) if self.per_edge.size else 0


def occurrence_counts(samples: Sequence[GraphSample], graph_set: GraphSet) -> OccurrenceCounts:
    """Activation counts per graph of ``graph_set`` and per topology edge.

    A sample carrying a ``graph_index`` counts for exactly that graph. Otherwise
    every graph whose edges are all active counts (the empty graph only for
    empty samples).
    """
    if not samples:
        raise ValueError("need at least one sample")
    per_edge = np.zeros(graph_set.topology.n_edges, dtype=np.int64)
    per_graph = np.zeros(len(graph_set), dtype=np.int64)
    members = [np.array(sorted(g), dtype=np.intp) for g in graph_set.graphs]
    for s in samples:
        per_edge += s.active
        if s.graph_index is not None:
            per_graph[s.graph_index] += 1
            continue
        any_on = s.active.any()
        for gi, idx in enumerate(members):
            if idx.size == 0:
                per_graph[gi] += not any_on
            elif s.active[idx].all():
                per_graph[gi] += 1
    return OccurrenceCounts(per_graph, per_edge, len(samples))
