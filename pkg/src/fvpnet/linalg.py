"""Cyclic Jacobi eigenvalue solver for small dense symmetric matrices."""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigenvalues(A, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of symmetric ``A`` in increasing order.

    Sweeps rotate every off-diagonal pair until the off-diagonal Frobenius norm
    falls below ``tol`` times the norm of ``A``.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0))):
        raise ValueError("matrix must be symmetric")
    if n == 1:
        return A.diagonal().copy()
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return np.zeros(n)
    A = 0.5 * (A + A.T)
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, float(np.sum(A * A) - np.sum(A.diagonal() ** 2))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
    return np.sort(A.diagonal())
