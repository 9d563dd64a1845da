"""Dense Phase-I simplex for feasibility of ``A x = b, x >= 0``.

Used to decide convex-hull membership (classical models, local behaviours).
Bland's rule is applied for both entering and leaving variables so the
method terminates on degenerate instances, which are common here: the
constraint rows of a hypergraph are usually linearly dependent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-10


@dataclass
class FeasibilityResult:
    feasible: bool
    x: np.ndarray
    infeasibility: float
    # Farkas vector: y @ A <= 0 column-wise and y @ b > 0 when infeasible.
    certificate: np.ndarray
    iterations: int


def phase_one(A, b, tol: float = FEAS_TOL, max_iter: int = 100_000) -> FeasibilityResult:
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).ravel()
    m, n = A.shape
    if b.size != m:
        raise ValueError("A and b disagree on the number of rows")

    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(n, n + m))

    it = 0
    while it < max_iter:
        reduced = T[m, :-1]
        candidates = np.flatnonzero(reduced < -PIVOT_TOL)
        if candidates.size == 0:
            break
        j = candidates[0]
        col = T[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:  # cannot happen: phase-one objective is bounded below
            raise RuntimeError("phase-one simplex reported an unbounded ray")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        i = min(ties, key=lambda r: basis[r])
        T[i] /= T[i, j]
        others = np.arange(m + 1) != i
        T[others] -= np.outer(T[others, j], T[i])
        basis[i] = j
        it += 1
    else:
        raise RuntimeError(f"simplex did not converge in {max_iter} pivots")

    infeas = float(max(-T[m, -1], 0.0))
    x = np.zeros(n)
    for row, var in enumerate(basis):
        if var < n:
            x[var] = max(T[row, -1], 0.0)
    y = (1.0 - T[m, n:n + m]) * sign
    return FeasibilityResult(infeas <= tol, x, infeas, y, it)


@dataclass
class HullResult:
    member: bool
    weights: np.ndarray
    infeasibility: float
    # Separating inequality  normal @ v <= bound, valid on every vertex;
    # only meaningful when member is False.
    normal: np.ndarray
    bound: float
    violation: float


def convex_hull_membership(vertices, point, tol: float = FEAS_TOL) -> HullResult:
    """Decide whether ``point`` is a convex combination of rows of ``vertices``."""
    V = np.asarray(vertices, dtype=float)
    p = np.asarray(point, dtype=float).ravel()
    if V.ndim != 2 or V.shape[1] != p.size:
        raise ValueError("vertices must be (k, d) with d = len(point)")
    A = np.vstack([V.T, np.ones(V.shape[0])])
    b = np.concatenate([p, [1.0]])
    res = phase_one(A, b, tol=tol)
    y = res.certificate
    normal, y0 = y[:-1], y[-1]
    # Vertices satisfy normal @ v + y0 <= 0; the point gives > 0.
    bound = -y0
    violation = float(normal @ p - bound)
    return HullResult(res.feasible, res.x, res.infeasibility, normal, bound, violation)
