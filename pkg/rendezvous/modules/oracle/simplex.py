"""Dense two-phase tableau simplex for min ||U||_1 s.t. C U = b.

Split U = p - q with p, q >= 0. Pivots follow Bland's rule (lowest eligible
column enters, ties in the ratio test leave by lowest basis index).
"""
from __future__ import annotations

from itertools import combinations
import logging
from typing import Optional, Tuple

import numpy as np

from rendezvous.core.errors import OracleError
from rendezvous.modules.oracle.schemas import LpSolution, LpStatus

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
MAX_PIVOTS = 50_000
ENUMERATION_MAX_COLUMNS = 12


def _pivot_col(T: np.ndarray, n_cols: int, tol: float) -> Optional[int]:
    candidates = np.flatnonzero(T[-1, :n_cols] < -tol)
    if candidates.size == 0:
        return None
    return int(candidates[0])


def _pivot_row(T: np.ndarray, basis: np.ndarray, col: int, tol: float) -> Optional[int]:
    column = T[:-1, col]
    eligible = np.flatnonzero(column > tol)
    if eligible.size == 0:
        return None
    ratios = T[eligible, -1] / column[eligible]
    best = ratios.min()
    ties = eligible[np.isclose(ratios, best, rtol=1e-12, atol=tol)]
    return int(ties[np.argmin(basis[ties])])


def _apply_pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    basis[row] = col
    T[row] = T[row] / T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] = T[i] - T[i, col] * T[row]


def _run_simplex(T: np.ndarray, basis: np.ndarray, n_cols: int, pivots: int, tol: float) -> Tuple[LpStatus, int]:
    while True:
        col = _pivot_col(T, n_cols, tol)
        if col is None:
            return LpStatus.OPTIMAL, pivots
        row = _pivot_row(T, basis, col, tol)
        if row is None:
            return LpStatus.UNBOUNDED, pivots
        _apply_pivot(T, basis, row, col)
        pivots += 1
        if pivots > MAX_PIVOTS:
            raise OracleError("pivot-limit", f"simplex exceeded {MAX_PIVOTS} pivots")


def _equilibrate(C: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    norms = np.linalg.norm(C, axis=1)
    scale = np.where(norms > 0.0, 1.0 / np.where(norms > 0.0, norms, 1.0), 1.0)
    return C * scale[:, None], b * scale, scale


def solve_l1_lp(
    C: np.ndarray,
    b: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    strict: bool = True,
) -> LpSolution:
    """Exact vertex solution of min sum|U_i| s.t. C U = b.

    rng shuffles the column order, which changes the pivot path but not the optimum.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if not (np.all(np.isfinite(C)) and np.all(np.isfinite(b))):
        raise OracleError("invalid-input", "C and b must be finite")
    m, n = C.shape
    Cs, bs, row_scale = _equilibrate(C, b)

    # Columns of A are [C, -C], optionally permuted.
    order = rng.permutation(2 * n) if rng is not None else np.arange(2 * n)
    A_full = np.hstack([Cs, -Cs])[:, order]
    sign = np.where(bs < 0.0, -1.0, 1.0)
    A = A_full * sign[:, None]
    rhs = bs * sign

    n_real = 2 * n
    T = np.zeros((m + 1, n_real + m + 1))
    T[:m, :n_real] = A
    T[:m, n_real:n_real + m] = np.eye(m)
    T[:m, -1] = rhs
    T[-1, :n_real] = -A.sum(axis=0)
    T[-1, -1] = -rhs.sum()
    basis = np.arange(n_real, n_real + m)

    _, pivots = _run_simplex(T, basis, n_real, 0, PIVOT_TOL)
    phase_one = -T[-1, -1]
    if phase_one > 1e-9 * (1.0 + float(np.abs(rhs).sum())):
        message = f"no U satisfies C U = b (phase-one residual {phase_one:.3e})"
        if strict:
            raise OracleError("infeasible", message, {"phase_one": phase_one})
        logger.warning(message)
        return LpSolution(U=np.full(n, np.nan), objective=float("nan"), status=LpStatus.INFEASIBLE, pivot_count=pivots)

    # Drive artificials out; rows where that is impossible are redundant.
    keep = np.ones(m, dtype=bool)
    for row in range(m):
        if basis[row] < n_real:
            continue
        entering = np.flatnonzero(np.abs(T[row, :n_real]) > PIVOT_TOL)
        if entering.size:
            _apply_pivot(T, basis, row, int(entering[0]))
            pivots += 1
        else:
            keep[row] = False

    rows = np.flatnonzero(keep)
    T2 = np.zeros((rows.size + 1, n_real + 1))
    T2[:-1, :n_real] = T[rows, :n_real]
    T2[:-1, -1] = T[rows, -1]
    basis2 = basis[rows].copy()
    cost = np.ones(n_real)
    T2[-1, :n_real] = cost - cost[basis2] @ T2[:-1, :n_real]
    T2[-1, -1] = -cost[basis2] @ T2[:-1, -1]
    status, pivots = _run_simplex(T2, basis2, n_real, pivots, PIVOT_TOL)
    if status != LpStatus.OPTIMAL:
        raise OracleError("unbounded", "l1 objective is bounded below; unbounded status indicates numerical failure")

    # Recompute basic values from the original columns to shed pivot round-off.
    x = np.zeros(n_real)
    A_basic = A[:, basis2]
    x_basic, *_ = np.linalg.lstsq(A_basic, rhs, rcond=None)
    x[basis2] = np.maximum(x_basic, 0.0)
    split = np.zeros(n_real)
    split[order] = x
    U = split[:n] - split[n:]
    objective = float(np.abs(U).sum())

    lam_scaled, *_ = np.linalg.lstsq(A_basic.T, cost[basis2], rcond=None)
    dual = row_scale * sign * lam_scaled
    _check_duality(C, b, U, dual, objective)
    logger.debug("simplex solved %dx%d in %d pivots, objective %.9f", m, n, pivots, objective)
    return LpSolution(U=U, objective=objective, status=LpStatus.OPTIMAL, pivot_count=pivots, dual=dual)


def _check_duality(C: np.ndarray, b: np.ndarray, U: np.ndarray, dual: np.ndarray, objective: float) -> None:
    dual_infeasibility = float(np.max(np.abs(C.T @ dual))) - 1.0 if C.size else 0.0
    gap = abs(float(b @ dual) - objective)
    residual = float(np.linalg.norm(C @ U - b))
    if dual_infeasibility > 1e-7 or gap > 1e-7 * (1.0 + objective) or residual > 1e-9 * (1.0 + float(np.linalg.norm(b))):
        logger.warning(
            "LP certificate weak: dual infeasibility %.3e, duality gap %.3e, residual %.3e",
            dual_infeasibility, gap, residual,
        )


def enumerate_l1_vertices(C: np.ndarray, b: np.ndarray) -> LpSolution:
    """Brute-force minimum over all basic solutions; small n only."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m, n = C.shape
    if n > ENUMERATION_MAX_COLUMNS:
        raise OracleError("enumeration-too-large", f"vertex enumeration limited to {ENUMERATION_MAX_COLUMNS} columns, got {n}")
    if not np.any(b):
        return LpSolution(U=np.zeros(n), objective=0.0, status=LpStatus.OPTIMAL, pivot_count=0)
    rank = int(np.linalg.matrix_rank(C))
    tolerance = 1e-9 * (1.0 + float(np.linalg.norm(b)))
    best_U: Optional[np.ndarray] = None
    best = np.inf
    visited = 0
    for subset in combinations(range(n), rank):
        columns = C[:, subset]
        if np.linalg.matrix_rank(columns) < rank:
            continue
        values, *_ = np.linalg.lstsq(columns, b, rcond=None)
        visited += 1
        if np.linalg.norm(columns @ values - b) > tolerance:
            continue
        objective = float(np.abs(values).sum())
        if objective < best:
            best = objective
            best_U = np.zeros(n)
            best_U[list(subset)] = values
    if best_U is None:
        raise OracleError("infeasible", "no basic solution satisfies C U = b")
    return LpSolution(U=best_U, objective=best, status=LpStatus.OPTIMAL, pivot_count=visited)
