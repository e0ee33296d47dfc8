"""State-dependent link weights and the mixing operators built from them.

States are ``(m, n)`` arrays, row i being agent i's block; ``x.ravel()`` is the
stacked vector in R^{mn}. The averaging operator is applied matrix-free from
neighbour differences, the dense ``m x m`` matrix is only built for inspection
and the property checkers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphSample, Topology

DS_TOL = 1e-12


class WeightModelError(ValueError):
    """A weight model cannot produce a doubly stochastic matrix on this topology."""


class WeightModel:
    symmetric = True

    def from_distance(self, dist: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def sup(self) -> float:
        """Largest value the weight can take over all states."""
        raise NotImplementedError

    def __call__(self, xi, xj) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        xj = np.asarray(xj, dtype=float)
        if xi.shape != xj.shape:
            raise ValueError(f"dimension mismatch {xi.shape} vs {xj.shape}")
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(xj))):
            raise ValueError("non-finite state passed to weight model")
        return self.from_distance(np.linalg.norm(xi - xj, axis=-1))


@dataclass(frozen=True)
class CuckerSmale(WeightModel):
    """``Q / (sigma^2 + |xi - xj|^2) ** beta_w``."""

    Q: float = 0.25
    sigma: float = 1.0
    beta_w: float = 1.0

    def __post_init__(self):
        if self.Q <= 0 or self.sigma <= 0 or self.beta_w < 0:
            raise WeightModelError("Cucker-Smale needs Q > 0, sigma > 0, beta_w >= 0")

    def from_distance(self, dist):
        return self.Q / (self.sigma ** 2 + dist ** 2) ** self.beta_w

    @property
    def sup(self):
        return self.Q / self.sigma ** (2 * self.beta_w)


@dataclass(frozen=True)
class LogDistance(WeightModel):
    """``Q / (1 + log(1 + |xi - xj|)^2)``."""

    Q: float = 0.25

    def __post_init__(self):
        if self.Q <= 0:
            raise WeightModelError("log-distance weight needs Q > 0")

    def from_distance(self, dist):
        return self.Q / (1.0 + np.log1p(dist) ** 2)

    @property
    def sup(self):
        return self.Q


@dataclass(frozen=True)
class Constant(WeightModel):
    c: float = 0.25

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise WeightModelError("constant weight must lie in (0, 1]")

    def from_distance(self, dist):
        return np.full(np.shape(dist), self.c, dtype=float)

    @property
    def sup(self):
        return self.c


def eval_weight(model: WeightModel, xi, xj) -> float:
    return float(model(xi, xj))


def validate_model(model: WeightModel, topology: Topology) -> None:
    """Reject models whose weights could push a diagonal entry below zero."""
    if topology.directed:
        raise WeightModelError(
            "built-in weight models need undirected edges; pass a validated matrix instead")
    if topology.max_degree * model.sup > 1.0 + DS_TOL:
        raise WeightModelError(
            f"max degree {topology.max_degree} x sup weight {model.sup:g} > 1: "
            "diagonal of the mixing matrix can become negative")


def _active_weights(sample: GraphSample, model: WeightModel, x: np.ndarray):
    top = sample.topology
    if top.directed:
        raise WeightModelError("built-in weight models need undirected edges")
    idx = np.flatnonzero(sample.active)
    src = top.src[idx]
    dst = top.dst[idx]
    diff = x[dst] - x[src]
    w = model.from_distance(np.sqrt(np.einsum("ij,ij->i", diff, diff)))
    return src, dst, w, diff


def build_mixing_matrix(sample: GraphSample, model: WeightModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m = sample.topology.m
    if x.shape[0] != m:
        raise ValueError(f"state has {x.shape[0]} agents, topology has {m}")
    W = np.zeros((m, m))
    src, dst, w, _ = _active_weights(sample, model, x)
    W[src, dst] += w
    W[dst, src] += w
    off = W.sum(axis=1)
    W[np.diag_indices(m)] = 1.0 - off
    if np.any(np.diag(W) < -DS_TOL):
        raise WeightModelError(
            f"negative diagonal {np.diag(W).min():.3g}: weights violate the degree bound")
    return W


def check_doubly_stochastic(W: np.ndarray, tol: float = DS_TOL) -> float:
    """Worst deviation of a user-supplied matrix from double stochasticity; raises if > tol."""
    W = np.asarray(W, dtype=float)
    dev = max(np.abs(W.sum(axis=0) - 1).max(), np.abs(W.sum(axis=1) - 1).max(),
              max(0.0, -W.min()), max(0.0, W.max() - 1.0))
    if dev > tol:
        raise WeightModelError(f"matrix is not doubly stochastic (deviation {dev:.3g})")
    return float(dev)


def apply_T(sample: GraphSample, model: WeightModel, x: np.ndarray) -> np.ndarray:
    """``(W(sample, x) kron I_n) x`` from neighbour sums, never forming the Kronecker product."""
    x = np.asarray(x, dtype=float)
    src, dst, w, diff = _active_weights(sample, model, x)
    out = x.copy()
    if w.size:
        flow = w[:, None] * diff
        np.add.at(out, src, flow)
        np.subtract.at(out, dst, flow)
    return out


def apply_T_hat(eta: float, sample: GraphSample, model: WeightModel, x: np.ndarray) -> np.ndarray:
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    x = np.asarray(x, dtype=float)
    return x + eta * (apply_T(sample, model, x) - x)


def spectral_norm(W: np.ndarray) -> float:
    """Largest singular value (LAPACK SVD)."""
    return float(np.linalg.norm(np.asarray(W, dtype=float), 2))
