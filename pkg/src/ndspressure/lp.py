"""Linear programs for fractional covers and their packing duals.

``fractional_cover`` goes through scipy's HiGHS; ``packing_simplex`` is a
small dense tableau simplex kept independent of it so that the two sides of
the cover/packing duality are computed by different code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog


class InfeasibleCover(RuntimeError):
    """Some target point lies in no candidate ball."""


@dataclass(frozen=True)
class LPResult:
    value: float
    x: np.ndarray


def fractional_cover(member: np.ndarray, weights: np.ndarray) -> LPResult:
    """min sum_i w_i c_i  s.t.  sum_i c_i [z in B_i] >= 1 for every z, c >= 0.

    ``member`` is (balls, points) boolean.
    """
    member = np.asarray(member, dtype=bool)
    if not member.any(axis=0).all():
        raise InfeasibleCover("a target point is covered by no candidate ball")
    scale = float(np.max(weights))
    A = sparse.csr_matrix(member.T.astype(float))
    res = linprog(
        c=np.asarray(weights) / scale,
        A_ub=-A,
        b_ub=-np.ones(member.shape[1]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"cover LP failed: {res.message}")
    return LPResult(value=float(res.fun) * scale, x=np.asarray(res.x))


def packing_simplex(member: np.ndarray, weights: np.ndarray, max_iter: int = 100_000) -> LPResult:
    """max sum_z mu_z  s.t.  sum_{z in B_i} mu_z <= w_i for every ball, mu >= 0.

    Dense tableau simplex from the origin (feasible since w > 0), Dantzig
    pricing with Bland's rule as an anti-cycling fallback.
    """
    A = np.asarray(member, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("ball weights must be positive")
    scale = float(np.max(w))
    b = w / scale
    m, n = A.shape
    # tableau [A | I | b], objective row holds reduced costs of maximise 1.x
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -1.0
    basis = list(range(n, n + m))
    tol = 1e-12
    degenerate_run = 0
    for _ in range(max_iter):
        row = T[m, :-1]
        if degenerate_run > 50:
            cand = np.nonzero(row < -tol)[0]
            if cand.size == 0:
                break
            col = int(cand[0])
        else:
            col = int(np.argmin(row))
            if row[col] >= -tol:
                break
        colv = T[:m, col]
        pos = colv > tol
        if not pos.any():
            raise RuntimeError("packing LP unbounded; some point lies in no ball")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / colv[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + 1e-15)[0]
        r = int(min(ties, key=lambda i: basis[i]))
        degenerate_run = degenerate_run + 1 if best <= tol else 0
        T[r] /= T[r, col]
        for i in range(m + 1):
            if i != r and T[i, col] != 0.0:
                T[i] -= T[i, col] * T[r]
        basis[r] = col
    else:
        raise RuntimeError("simplex iteration limit reached")
    x = np.zeros(n + m)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    mu = np.clip(x[:n], 0.0, None) * scale
    return LPResult(value=float(mu.sum()), x=mu)
