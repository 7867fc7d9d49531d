## @file lp_solver.py
## @brief Small dense linear-program solver (two-phase simplex, Bland's rule).
##
## Problems are stated over free variables:
##     min c·z  s.t.  G z ≤ h,  A_eq z = b_eq.
## They are converted to standard form by splitting z = z⁺ − z⁻ and adding one
## slack per inequality, then solved on a dense tableau.

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegeneratePivotError, InvalidInputError

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-8
PIVOT_TOL = 1e-12
REDUCED_COST_TOL = 1e-10
MAX_PIVOTS = 50_000


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(values, cols: int) -> np.ndarray:
    if values is None:
        return np.zeros((0, cols))
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else np.zeros((0, cols))
    return arr


def _as_vector(values) -> np.ndarray:
    if values is None:
        return np.zeros(0)
    return np.array(values, dtype=float).reshape(-1)


@dataclass(eq=False)
class LinearProgram:
    c: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        self.c = _as_vector(self.c)
        n = self.c.size
        self.G = _as_matrix(self.G, n)
        self.h = _as_vector(self.h)
        self.A_eq = _as_matrix(self.A_eq, n)
        self.b_eq = _as_vector(self.b_eq)
        if self.G.shape != (self.h.size, n):
            raise InvalidInputError(
                f"inequality block has shape {self.G.shape}, expected ({self.h.size}, {n})"
            )
        if self.A_eq.shape != (self.b_eq.size, n):
            raise InvalidInputError(
                f"equality block has shape {self.A_eq.shape}, expected ({self.b_eq.size}, {n})"
            )
        for name in ("c", "G", "h", "A_eq", "b_eq"):
            if not np.isfinite(getattr(self, name)).all():
                raise InvalidInputError(f"linear program field {name} is not finite")

    @property
    def num_vars(self) -> int:
        return self.c.size


@dataclass(eq=False)
class LpSolution:
    status: LpStatus
    z: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = float("nan")
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    piv = T[row, col]
    if abs(piv) < PIVOT_TOL:
        raise DegeneratePivotError(f"pivot {piv:.3e} at ({row}, {col}) below {PIVOT_TOL}")
    T[row] /= piv
    others = np.arange(T.shape[0]) != row
    T[others] -= np.outer(T[others, col], T[row])
    basis[row] = col


def _bland(T: np.ndarray, basis: list[int], allowed: int, budget: list[int]) -> LpStatus:
    """@brief Run primal simplex on tableau T until optimal or unbounded.
    @param T        (m+1)×(N+1) tableau; last row holds reduced costs, last column rhs.
    @param basis    Basic variable index per constraint row (updated in place).
    @param allowed  Only columns < allowed may enter.
    @param budget   One-element pivot counter shared across phases.
    """
    m = T.shape[0] - 1
    while True:
        costs = T[-1, :allowed]
        entering = np.flatnonzero(costs < -REDUCED_COST_TOL)
        if entering.size == 0:
            return LpStatus.OPTIMAL
        col = int(entering[0])
        column = T[:m, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            if np.any(column > 0.0):
                raise DegeneratePivotError(
                    f"column {col} has only pivots below {PIVOT_TOL}"
                )
            return LpStatus.UNBOUNDED
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, basis, row, col)
        budget[0] += 1
        if budget[0] > MAX_PIVOTS:
            raise DegeneratePivotError(f"no convergence after {MAX_PIVOTS} pivots")


def solve_lp(lp: LinearProgram) -> LpSolution:
    """@brief Solve a linear program with the two-phase simplex method.
    @param lp  Problem over free variables.
    @return    LpSolution; infeasible and unbounded are statuses, not errors.
    """
    n = lp.num_vars
    m_ineq = lp.h.size
    m_eq = lp.b_eq.size
    m = m_ineq + m_eq

    # columns: z⁺ (n) | z⁻ (n) | slacks (m_ineq) | artificials (m)
    n_struct = 2 * n + m_ineq
    A = np.zeros((m, n_struct))
    A[:m_ineq, :n] = lp.G
    A[:m_ineq, n:2 * n] = -lp.G
    A[:m_ineq, 2 * n:] = np.eye(m_ineq)
    A[m_ineq:, :n] = lp.A_eq
    A[m_ineq:, n:2 * n] = -lp.A_eq
    b = np.concatenate([lp.h, lp.b_eq])
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)

    T = np.zeros((m + 1, n_struct + m + 1))
    T[:m, :n_struct] = A
    T[:m, n_struct:n_struct + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n_struct] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n_struct, n_struct + m))
    budget = [0]

    _bland(T, basis, n_struct, budget)
    infeasibility = -T[-1, -1]
    if infeasibility > FEASIBILITY_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        log.debug("phase I ended with infeasibility %.3e", infeasibility)
        return LpSolution(LpStatus.INFEASIBLE, pivots=budget[0])

    # drive zero-level artificials out of the basis, dropping redundant rows
    keep = []
    for row in range(m):
        if basis[row] < n_struct:
            keep.append(row)
            continue
        candidates = np.flatnonzero(np.abs(T[row, :n_struct]) > PIVOT_TOL)
        if candidates.size:
            _pivot(T, basis, row, int(candidates[0]))
            keep.append(row)
    rows = keep + [m]
    T = np.hstack([T[rows][:, :n_struct], T[rows][:, -1:]])
    basis = [basis[r] for r in keep]
    m = len(keep)

    cost = np.concatenate([lp.c, -lp.c, np.zeros(m_ineq)])
    cb = cost[basis] if basis else np.zeros(0)
    T[-1, :n_struct] = cost - cb @ T[:m, :n_struct]
    T[-1, -1] = -(cb @ T[:m, -1])

    status = _bland(T, basis, n_struct, budget)
    if status is LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, pivots=budget[0])

    x = np.zeros(n_struct)
    for row, var in enumerate(basis):
        x[var] = T[row, -1]
    z = x[:n] - x[n:2 * n]
    return LpSolution(LpStatus.OPTIMAL, z, float(lp.c @ z), budget[0])


def max_violation(lp: LinearProgram, z) -> float:
    """@brief Largest constraint violation of z (0 when feasible)."""
    z = np.asarray(z, dtype=float)
    worst = 0.0
    if lp.h.size:
        worst = max(worst, float(np.max(lp.G @ z - lp.h, initial=0.0)))
    if lp.b_eq.size:
        worst = max(worst, float(np.max(np.abs(lp.A_eq @ z - lp.b_eq), initial=0.0)))
    return worst
