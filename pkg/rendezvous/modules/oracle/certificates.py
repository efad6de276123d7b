from __future__ import annotations

import numpy as np

from rendezvous.modules.oracle.schemas import Certificate
from rendezvous.modules.orbit.schemas import CONTROL_DIM


def _prepare(C: np.ndarray, b: np.ndarray, U: np.ndarray):
    C = np.atleast_2d(np.asarray(C, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    U = np.asarray(U, dtype=float).reshape(-1)
    return C, b, U


def _primal_violation(C: np.ndarray, b: np.ndarray, U: np.ndarray) -> float:
    return float(np.linalg.norm(C @ U - b)) / (1.0 + float(np.linalg.norm(b)))


def certificate_l1(C: np.ndarray, b: np.ndarray, U: np.ndarray, tol: float = 1e-6) -> Certificate:
    """Dual feasibility for min ||U||_1: C^T lam = sign(U) on the support, |C^T lam| <= 1 elsewhere.

    The support is |U_i| > tol * ||U||_inf and lam is a least-squares fit on it.
    """
    C, b, U = _prepare(C, b, U)
    primal = _primal_violation(C, b, U)
    if primal > tol:
        return Certificate(accepted=False, max_violation=primal, reason="residual-infeasible")
    scale = float(np.max(np.abs(U))) if U.size else 0.0
    if scale == 0.0:
        return Certificate(accepted=True, max_violation=primal, reason="ok", dual=np.zeros(C.shape[0]))

    active = np.abs(U) > tol * scale
    target = np.sign(U[active])
    lam, *_ = np.linalg.lstsq(C[:, active].T, target, rcond=None)
    g = C.T @ lam
    active_violation = float(np.max(np.abs(g[active] - target)))
    inactive_violation = float(np.max(np.abs(g[~active]) - 1.0, initial=0.0))
    max_violation = max(active_violation, inactive_violation, primal)

    if active_violation > tol:
        reason = "active-mismatch"
    elif inactive_violation > tol:
        reason = "inactive-exceeds-one"
    else:
        reason = "ok"
    return Certificate(
        accepted=reason == "ok",
        max_violation=max_violation,
        reason=reason,
        active=int(active.sum()),
        dual=lam,
    )


def certificate_l21(C: np.ndarray, b: np.ndarray, U: np.ndarray, tol: float = 1e-3) -> Certificate:
    """Block dual feasibility for min sum_k ||u(k)||_2.

    Active blocks need C_k^T lam = u(k)/||u(k)||; inactive blocks need ||C_k^T lam|| <= 1.
    """
    C, b, U = _prepare(C, b, U)
    if U.size % CONTROL_DIM:
        raise ValueError(f"U length {U.size} is not a multiple of {CONTROL_DIM}")
    primal = _primal_violation(C, b, U)
    if primal > tol:
        return Certificate(accepted=False, max_violation=primal, reason="residual-infeasible")

    blocks = U.reshape(-1, CONTROL_DIM)
    norms = np.linalg.norm(blocks, axis=1)
    scale = float(norms.max()) if norms.size else 0.0
    if scale == 0.0:
        return Certificate(accepted=True, max_violation=primal, reason="ok", dual=np.zeros(C.shape[0]))

    C_blocks = C.reshape(C.shape[0], -1, CONTROL_DIM)  # (rows, N, 3)
    active = norms > tol * scale
    directions = blocks[active] / norms[active, None]
    system = np.concatenate([C_blocks[:, k, :].T for k in np.flatnonzero(active)], axis=0)
    lam, *_ = np.linalg.lstsq(system, directions.reshape(-1), rcond=None)

    g = np.einsum("rkc,r->kc", C_blocks, lam)
    active_violation = float(np.max(np.abs(g[active] - directions)))
    inactive_norms = np.linalg.norm(g[~active], axis=1)
    inactive_violation = float(np.max(inactive_norms - 1.0, initial=0.0))
    max_violation = max(active_violation, inactive_violation, primal)

    if active_violation > tol:
        reason = "active-mismatch"
    elif inactive_violation > tol:
        reason = "inactive-exceeds-one"
    else:
        reason = "ok"
    return Certificate(
        accepted=reason == "ok",
        max_violation=max_violation,
        reason=reason,
        active=int(active.sum()),
        dual=lam,
    )
