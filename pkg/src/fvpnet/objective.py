"""Separable objectives ``f(x) = sum_i f_i(x_i)`` with declared (rho, K) constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Objective:
    """Base class: subclasses supply ``value`` and ``grad`` on ``(m, n)`` states.

    ``rho`` is the declared strong-convexity modulus, ``K`` the Lipschitz
    constant of the gradient.
    """

    rho: float
    K: float

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_constants(self):
        if not 0 < self.rho <= self.K:
            raise ValueError(f"need 0 < rho <= K, got rho={self.rho}, K={self.K}")


class QuadraticObjective(Objective):
    """``f_i(x_i) = scale/2 * |x_i - d_i|^2``; rho = K = scale exactly."""

    def __init__(self, anchors, scale: float = 1.0):
        self.anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
        if not np.all(np.isfinite(self.anchors)):
            raise ValueError("anchors must be finite")
        self.scale = float(scale)
        self.rho = self.K = self.scale
        self._check_constants()

    @property
    def shape(self):
        return self.anchors.shape

    def value(self, x):
        d = np.asarray(x, dtype=float) - self.anchors
        return 0.5 * self.scale * float(np.sum(d * d))

    def grad(self, x):
        g = self.scale * (np.asarray(x, dtype=float) - self.anchors)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
        return g


class QuadraticForm(Objective):
    """``f_i(x_i) = 1/2 (x_i - d_i)^T H (x_i - d_i)`` with one shared SPD ``H``.

    Declared constants default to the extreme eigenvalues of ``H`` but may be
    given explicitly (and are then only validated, see :func:`probe_constants`).
    """

    def __init__(self, anchors, hessian, rho: float | None = None, K: float | None = None):
        self.anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
        self.hessian = np.asarray(hessian, dtype=float)
        n = self.anchors.shape[1]
        if self.hessian.shape != (n, n):
            raise ValueError(f"hessian must be {n}x{n}")
        if not np.allclose(self.hessian, self.hessian.T):
            raise ValueError("hessian must be symmetric")
        eig = np.linalg.eigvalsh(self.hessian)
        self.rho = float(eig[0]) if rho is None else float(rho)
        self.K = float(eig[-1]) if K is None else float(K)
        self._check_constants()

    @property
    def shape(self):
        return self.anchors.shape

    def value(self, x):
        d = np.asarray(x, dtype=float) - self.anchors
        return 0.5 * float(np.einsum("ij,jk,ik->", d, self.hessian, d))

    def grad(self, x):
        g = (np.asarray(x, dtype=float) - self.anchors) @ self.hessian
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
        return g


@dataclass
class CallableObjective(Objective):
    """Wraps user callables taking and returning ``(m, n)`` arrays."""

    f: object
    gradient: object
    rho: float
    K: float
    minimizer: np.ndarray | None = None

    def __post_init__(self):
        self._check_constants()

    def value(self, x):
        return float(self.f(np.asarray(x, dtype=float)))

    def grad(self, x):
        g = np.asarray(self.gradient(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
        return g


def grad(obj: Objective, x) -> np.ndarray:
    return obj.grad(x)


def analytic_consensus_minimizer(obj: Objective) -> np.ndarray:
    """Minimizer of ``sum_i f_i(s)`` over a common ``s``.

    For both quadratic families with a shared curvature this is the anchor mean.
    """
    if isinstance(obj, (QuadraticObjective, QuadraticForm)):
        return obj.anchors.mean(axis=0)
    if isinstance(obj, CallableObjective) and obj.minimizer is not None:
        return np.asarray(obj.minimizer, dtype=float)
    raise TypeError(f"no closed-form consensus minimizer for {type(obj).__name__}")


@dataclass
class ProbeResult:
    rho_hat: float
    K_hat: float
    pairs: int
    ok: bool


def probe_constants(obj: Objective, sample_count: int, rng: np.random.Generator,
                    radius: float = 10.0, shape: tuple[int, int] | None = None,
                    tol: float = 1e-9) -> ProbeResult:
    """Empirical range of <x-y, grad f(x) - grad f(y)> / |x-y|^2 over random pairs.

    ``ok`` is false if the declared ``rho`` exceeds the smallest observed ratio
    or the declared ``K`` is below the largest one.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    if shape is None:
        shape = obj.anchors.shape
    lo, hi, used = np.inf, -np.inf, 0
    for _ in range(sample_count):
        x = rng.uniform(-radius, radius, size=shape)
        y = rng.uniform(-radius, radius, size=shape)
        dx = x - y
        nn = float(np.sum(dx * dx))
        if nn == 0.0:
            continue
        r = float(np.sum(dx * (obj.grad(x) - obj.grad(y)))) / nn
        lo, hi, used = min(lo, r), max(hi, r), used + 1
    ok = used > 0 and obj.rho <= lo + tol and hi <= obj.K + tol
    return ProbeResult(lo, hi, used, ok)
