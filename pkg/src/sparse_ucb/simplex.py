"""Small dense two-phase simplex solver with Bland's anti-cycling rule.

Solves ``min c @ x  s.t.  A @ x >= b,  x >= 0``.  The problems built by
:mod:`sparse_ucb.lower_bound` have a few dozen rows at most, so the solver
favours robustness over speed: a full tableau, Bland's rule for both the
entering and leaving variable, and a final re-solve of the optimal basis
against the original data to strip accumulated pivoting error.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure

PIVOT_TOL = 1e-12
# reduced costs this small are pivoting noise, not improving directions
COST_TOL = 1e-10
UNBOUNDED_TOL = 1e-7
FEAS_TOL = 1e-9


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """``min objective @ c`` subject to ``rows @ c >= rhs`` and ``c >= 0``."""

    objective: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self) -> None:
        obj = np.asarray(self.objective, dtype=np.float64).reshape(-1)
        rows = np.asarray(self.rows, dtype=np.float64).reshape(-1, obj.size)
        rhs = np.asarray(self.rhs, dtype=np.float64).reshape(-1)
        if rows.shape[0] != rhs.size:
            raise ValueError("rows and rhs disagree on the number of constraints")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "rhs", rhs)

    @property
    def n_constraints(self) -> int:
        return int(self.rows.shape[0])

    @property
    def n_vars(self) -> int:
        return int(self.objective.size)

    def slack(self, x: np.ndarray) -> np.ndarray:
        return self.rows @ x - self.rhs

    def is_feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        scale = 1.0 + np.abs(self.rhs) + np.abs(self.rows) @ np.abs(x)
        return bool(np.all(x >= -tol) and np.all(self.slack(x) >= -tol * scale))


@dataclass(frozen=True)
class LpSolution:
    x: np.ndarray
    value: float
    status: LpStatus
    iterations: int = 0
    basis: tuple = ()


def _pivot(tab: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for r in range(tab.shape[0]):
        if r != row and tab[r, col] != 0.0:
            tab[r] -= tab[r, col] * tab[row]
    basis[row] = col


def _iterate(tab: np.ndarray, basis: list[int], allowed: int, max_iter: int) -> tuple[bool, int]:
    """Bland's-rule simplex on ``tab`` (last row = reduced costs, last column = rhs).

    Only the first ``allowed`` columns may enter.  Returns ``(bounded, iterations)``.
    """
    m = tab.shape[0] - 1
    for it in range(max_iter):
        cost = tab[-1, :allowed]
        for col in np.flatnonzero(cost < -COST_TOL):
            column = tab[:m, col]
            positive = np.flatnonzero(column > PIVOT_TOL)
            if positive.size:
                break
            if cost[col] < -UNBOUNDED_TOL:
                return False, it
        else:
            return True, it
        ratios = tab[positive, -1] / column[positive]
        best = ratios.min()
        ties = positive[ratios <= best + PIVOT_TOL * (1.0 + abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(tab, basis, row, col)
    raise NumericalFailure(f"simplex did not converge in {max_iter} pivots")


def solve_lp(problem: LpProblem, max_iter: int = 10_000) -> LpSolution:
    """Solve ``problem`` to optimality with the two-phase method."""
    A, b, c, col_scale = _equilibrate(problem)
    m, n = A.shape
    if m == 0:
        # only x >= 0: optimum at 0 unless some cost is negative
        if np.any(c < 0):
            return LpSolution(np.zeros(n), -np.inf, LpStatus.UNBOUNDED)
        return LpSolution(np.zeros(n), 0.0, LpStatus.OPTIMAL)

    # A x - s = b with surplus s >= 0; flip rows so that b >= 0
    sign = np.where(b < 0, -1.0, 1.0)
    A_std = np.hstack([A, -np.eye(m)]) * sign[:, None]
    b_std = b * sign
    n_std = n + m
    tab = np.zeros((m + 1, n_std + m + 1))
    tab[:m, :n_std] = A_std
    tab[:m, n_std : n_std + m] = np.eye(m)
    tab[:m, -1] = b_std
    basis = list(range(n_std, n_std + m))
    # phase 1: minimise the sum of artificials
    tab[-1, :n_std] = -A_std.sum(axis=0)
    tab[-1, -1] = -b_std.sum()
    bounded, it1 = _iterate(tab, basis, n_std, max_iter)
    if not bounded:
        raise NumericalFailure("phase 1 reported an unbounded ray; the problem is badly scaled")
    if -tab[-1, -1] > FEAS_TOL * (1.0 + np.abs(b_std).sum()):
        return LpSolution(np.full(n, np.nan), np.nan, LpStatus.INFEASIBLE, it1)

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n_std:
            candidates = np.flatnonzero(np.abs(tab[r, :n_std]) > PIVOT_TOL)
            if candidates.size == 0:
                continue
            _pivot(tab, basis, r, int(candidates[0]))
        keep.append(r)
    tab = np.vstack([tab[keep][:, list(range(n_std)) + [tab.shape[1] - 1]], np.zeros((1, n_std + 1))])
    basis = [basis[r] for r in keep]

    # phase 2: original objective expressed in reduced costs
    cost = np.concatenate([c, np.zeros(m)])
    tab[-1, :n_std] = cost
    tab[-1, -1] = 0.0
    for r, j in enumerate(basis):
        if cost[j] != 0.0:
            tab[-1] -= cost[j] * tab[r]
    bounded, it2 = _iterate(tab, basis, n_std, max_iter)
    if not bounded:
        return LpSolution(np.full(n, np.nan), -np.inf, LpStatus.UNBOUNDED, it1 + it2)

    x_std = _refine(A_std, b_std, basis, tab)
    x = np.maximum(x_std[:n], 0.0) * col_scale
    if not problem.is_feasible(x):
        raise NumericalFailure(f"optimal basis {basis} is infeasible after refinement; slack={problem.slack(x)}")
    return LpSolution(x, float(problem.objective @ x), LpStatus.OPTIMAL, it1 + it2, tuple(basis))


def _equilibrate(problem: LpProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Scale rows, then columns, to unit max-norm.

    Returns the scaled ``(A, b, c)`` and the column factors ``x = col_scale * y``
    mapping the scaled solution back.
    """
    A = problem.rows.copy()
    b = problem.rhs.copy()
    c = problem.objective.copy()
    if A.size == 0:
        return A, b, c, np.ones(c.size)
    row = np.abs(A).max(axis=1)
    row[row == 0.0] = 1.0
    A /= row[:, None]
    b /= row
    col = np.abs(A).max(axis=0)
    col[col == 0.0] = 1.0
    A /= col[None, :]
    col_scale = 1.0 / col
    return A, b, c * col_scale, col_scale


def _refine(A_std: np.ndarray, b_std: np.ndarray, basis: list[int], tab: np.ndarray) -> np.ndarray:
    n_std = A_std.shape[1]
    x = np.zeros(n_std)
    B = A_std[:, basis]
    try:
        if B.shape[0] == B.shape[1]:
            x[basis] = np.linalg.solve(B, b_std)
        else:
            # redundant rows were dropped from the basis
            x[basis] = np.linalg.lstsq(B, b_std, rcond=None)[0]
    except np.linalg.LinAlgError:
        x[basis] = tab[:-1, -1]
    return x
