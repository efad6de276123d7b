"""IRLS solvers for min ||U||_1 and min sum_k ||u(k)||_2 subject to C U = b.

Each iteration takes the weighted minimum-norm step
    U = W^-1 C^T (C W^-1 C^T + tau I)^-1 b,
then shrinks epsilon, checks termination and finally refreshes the weights.
Iterates that leave the constraint are reported as infeasible. A successful
run ends with a polish restricted to the support it found.
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, null_space, svdvals

from rendezvous.core.errors import SolverError
from rendezvous.modules.discretization.schemas import StackedSystem
from rendezvous.modules.irls.schemas import (
    IrlsConfig,
    IrlsReport,
    IrlsStatus,
    IterationRecord,
    SUCCESS_STATUSES,
    WeightState,
)
from rendezvous.modules.orbit.schemas import CONTROL_DIM

logger = logging.getLogger(__name__)

# Smallest admissible ratio between Cholesky pivots.
GRAMIAN_PIVOT_RATIO = 1e-6
RANK_RCOND = 1e-10
REFINE_STEPS = 2
SETTLED_STEP = 1e-6
# Repeated division by ten lands a few ulps above round targets such as 1e-6.
EPS_SLACK = 1e-9
RESIDUAL_TOL = 1e-9
# Rounding floor of the residual gate, relative to ||C|| ||U||.
RESIDUAL_ROUNDING = 1e-12
POLISH_CUT = 1e-3
POLISH_STEPS = 2000
POLISH_STEP_TOL = 1e-13
POLISH_SLACK = 1e-9
NULL_RCOND = 1e-9

WeightsLike = Union[WeightState, np.ndarray]


def _inverse_weights(weights: WeightsLike) -> np.ndarray:
    if isinstance(weights, WeightState):
        return weights.inverse
    return 1.0 / WeightState(weights).w


def block_norms(U: np.ndarray) -> np.ndarray:
    flat = np.asarray(U, dtype=float).reshape(-1)
    if flat.size % CONTROL_DIM:
        return np.abs(flat)
    return np.linalg.norm(flat.reshape(-1, CONTROL_DIM), axis=1)


def gramian_recursion(A: np.ndarray, B: np.ndarray, weights: WeightsLike) -> np.ndarray:
    """Lyapunov-type recursion for constant (A, B); equals C W^-1 C^T only in that case.

    G(0) = B W(0)^-1 B^T, G(k+1) = A G(k) A^T + B W(k+1)^-1 B^T. Stage k's
    column block in C is A^(N-1-k) B, so the earliest weight is propagated
    the most.
    """
    winv = _inverse_weights(weights).reshape(-1, B.shape[1])
    G = (B * winv[0]) @ B.T
    for k in range(1, winv.shape[0]):
        G = A @ G @ A.T + (B * winv[k]) @ B.T
    return G


def gramian(
    C: np.ndarray,
    weights: WeightsLike,
    cross_check: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    rtol: float = 1e-9,
) -> np.ndarray:
    G = (C * _inverse_weights(weights)) @ C.T
    if cross_check is not None:
        recursive = gramian_recursion(cross_check[0], cross_check[1], weights)
        gap = float(np.abs(recursive - G).max())
        if gap > rtol * max(float(np.abs(G).max()), 1.0):
            raise SolverError(
                "gramian-mismatch",
                f"recursive Gramian differs from C W^-1 C^T by {gap:.3e}",
                {"gap": gap},
            )
    return G


def check_rank(C: np.ndarray) -> None:
    """Reject stacked systems whose rows are dependent; no weighting can make their Gramian invertible."""
    singular_values = svdvals(C)
    rank = int(np.sum(singular_values > RANK_RCOND * singular_values.max())) if singular_values.size else 0
    if rank < C.shape[0]:
        raise SolverError(
            "singular-gramian",
            f"stacked system has rank {rank} < {C.shape[0]}; target state is not reachable from every start",
            {"rank": rank, "rows": int(C.shape[0])},
        )


def _factor_gramian(G: np.ndarray, tau: float):
    if not np.all(np.isfinite(G)):
        raise SolverError("singular-gramian", "Gramian has non-finite entries")
    try:
        factor = cho_factor(G + tau * np.eye(G.shape[0]), lower=False, check_finite=False)
    except LinAlgError as exc:
        raise SolverError("singular-gramian", f"Gramian is not positive definite: {exc}") from exc
    pivots = np.abs(np.diag(factor[0]))
    if pivots.min() <= GRAMIAN_PIVOT_RATIO * pivots.max():
        raise SolverError(
            "singular-gramian",
            "Gramian is numerically singular",
            {"pivot_ratio": float(pivots.min() / pivots.max())},
        )
    return factor


def _min_norm_step(C: np.ndarray, winv: np.ndarray, b: np.ndarray, tau: float) -> np.ndarray:
    """Regularized step, refined against the unregularized constraint."""
    factor = _factor_gramian((C * winv) @ C.T, tau)
    u = winv * (C.T @ cho_solve(factor, b, check_finite=False))
    for _ in range(REFINE_STEPS):
        u = u + winv * (C.T @ cho_solve(factor, b - C @ u, check_finite=False))
    return u


def weighted_min_norm(C: np.ndarray, weights: WeightsLike, b: np.ndarray, tau: float = 0.0) -> np.ndarray:
    """argmin U^T W U subject to C U = b, with absolute Tikhonov term tau."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    winv = _inverse_weights(weights)
    if not np.any(b):
        return np.zeros(C.shape[1])
    check_rank(C)
    return _min_norm_step(C, winv, b, tau)


def eps_update(
    eps_prev: float,
    u: np.ndarray,
    rule: str = "sorted",
    r: int = 6,
    u_prev: Optional[np.ndarray] = None,
) -> float:
    u = np.asarray(u, dtype=float).reshape(-1)
    if rule == "max":
        return max(0.0, min(eps_prev, float(np.max(u))))
    if rule == "sorted":
        # The (r+1)-th largest magnitude only carries information past r entries.
        if u.size <= r:
            return eps_prev
        magnitudes = np.sort(np.abs(u))[::-1]
        return min(eps_prev, float(magnitudes[r]) / u.size)
    if rule == "continuation":
        if u_prev is None:
            return eps_prev
        step = float(np.max(np.abs(u - u_prev)))
        scale = max(1.0, float(np.max(np.abs(u))))
        if step <= math.sqrt(eps_prev) / 100.0 * scale:
            return eps_prev / 10.0
        return eps_prev
    raise ValueError(f"Invalid eps rule: {rule}")


def update_weights(u: np.ndarray, eps: float, mode: str = "l1", weight_rule: str = "block") -> WeightState:
    u = np.asarray(u, dtype=float).reshape(-1)
    if mode == "l1":
        return WeightState((u**2 + eps**2) ** -0.5)
    if weight_rule == "entrywise":
        return WeightState((u**2 + eps**2) ** -0.25)
    if weight_rule == "block":
        per_block = (block_norms(u) ** 2 + eps**2) ** -0.5
        return WeightState(np.repeat(per_block, CONTROL_DIM))
    raise ValueError(f"Invalid weight rule: {weight_rule}")


def _row_equilibrate(C: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(C, axis=1)
    scale = np.where(norms > 0.0, 1.0 / np.where(norms > 0.0, norms, 1.0), 1.0)
    return C * scale[:, None], b * scale


def _objectives(u: np.ndarray) -> Tuple[float, float]:
    return float(np.abs(u).sum()), float(block_norms(u).sum())


def purify_l1(C: np.ndarray, b: np.ndarray, u: np.ndarray) -> Tuple[np.ndarray, int]:
    """Reduce a feasible U to linearly independent support columns without raising ||U||_1.

    Entries below POLISH_CUT * ||U||_inf are dropped first. Each pass moves along a
    null direction of the support columns until one more entry reaches zero.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    support = np.flatnonzero(np.abs(u) > POLISH_CUT * float(np.max(np.abs(u))))
    v = np.zeros_like(u)
    v[support] = u[support]
    correction, *_ = np.linalg.lstsq(C[:, support], b - C @ v, rcond=None)
    v[support] += correction

    steps = 0
    while support.size:
        kernel = null_space(C[:, support], rcond=NULL_RCOND)
        if kernel.shape[1] == 0:
            break
        direction = kernel[:, 0]
        values = v[support]
        if np.sign(values) @ direction > 0.0:
            direction = -direction
        shrinking = values * direction < 0.0
        if not shrinking.any():
            break
        ratios = -values[shrinking] / direction[shrinking]
        hit = int(np.argmin(ratios))
        v[support] = values + ratios[hit] * direction
        dropped = support[shrinking][hit]
        v[dropped] = 0.0
        support = support[support != dropped]
        steps += 1

    fit, *_ = np.linalg.lstsq(C[:, support], b, rcond=None)
    v = np.zeros_like(u)
    v[support] = fit
    return v, steps


def polish_l21(C: np.ndarray, b: np.ndarray, u: np.ndarray, tau: float = 0.0) -> Tuple[np.ndarray, int]:
    """Unsmoothed block reweighting restricted to stages above POLISH_CUT * max ||u(k)||."""
    u = np.asarray(u, dtype=float).reshape(-1)
    scale = float(block_norms(u).max())
    v = u
    steps = 0
    for steps in range(1, POLISH_STEPS + 1):
        norms = block_norms(v)
        winv = np.repeat(np.where(norms > POLISH_CUT * scale, norms, 0.0), CONTROL_DIM)
        nxt = _min_norm_step(C, winv, b, tau)
        step = float(np.max(np.abs(nxt - v)))
        v = nxt
        if step <= POLISH_STEP_TOL * scale:
            break
    return v, steps


def solve_irls(
    C: np.ndarray,
    b: np.ndarray,
    config: Optional[IrlsConfig] = None,
    mode: str = "l1",
) -> IrlsReport:
    """Run IRLS on C U = b. mode is "l1" or "l21"."""
    config = config or IrlsConfig()
    if mode not in ("l1", "l21"):
        raise ValueError(f"Invalid solver mode: {mode}")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    rows, n = C.shape
    b_norm = float(np.linalg.norm(b))
    c_norm = float(np.linalg.norm(C))
    Cs, bs = _row_equilibrate(C, b) if config.scaling == "normalized" else (C, b)
    r = config.r if config.r is not None else rows
    signal_size = n // CONTROL_DIM if mode == "l21" and n % CONTROL_DIM == 0 else n
    if config.eps_rule == "sorted" and signal_size <= r:
        logger.warning(
            "sorted eps rule needs more than r=%d entries, got %d; eps stays at %.3e (use continuation)",
            r, signal_size, config.eps0,
        )

    def residual_of(u: np.ndarray) -> float:
        return float(np.linalg.norm(C @ u - b)) / (1.0 + b_norm)

    def residual_limit(u: np.ndarray) -> float:
        return max(RESIDUAL_TOL, RESIDUAL_ROUNDING * c_norm * float(np.linalg.norm(u)) / (1.0 + b_norm))

    weights = WeightState.ones(n)
    eps = config.eps0
    eps_history = [eps]
    trace = []

    if b_norm == 0.0:
        u = np.zeros(n)
        trace.append(IterationRecord(j=1, eps=0.0, norm_l1=0.0, norm_l21=0.0, residual=0.0, step=0.0))
        eps_history.append(0.0)
        return IrlsReport(
            U=u, mode=mode, norm_l1=0.0, norm_l21=0.0, residual=0.0, iterations=1,
            status=IrlsStatus.CONVERGED, eps_final=0.0, weights=weights,
            eps_history=eps_history, trace=trace,
        )

    check_rank(Cs)
    u_prev: Optional[np.ndarray] = None
    u = np.zeros(n)
    step = math.inf
    status = IrlsStatus.MAX_ITERATIONS
    tau_abs = 0.0
    j = 0
    for j in range(1, config.jmax + 1):
        G = gramian(Cs, weights)
        tau_abs = config.tau * float(np.trace(G)) / rows
        u = _min_norm_step(Cs, weights.inverse, bs, tau_abs)

        # Group sparsity ranks stages, not components.
        signal = block_norms(u) if mode == "l21" and config.eps_rule == "sorted" else u
        eps = eps_update(eps, signal, config.eps_rule, r, u_prev)
        eps_history.append(eps)
        step = math.inf if u_prev is None else float(np.max(np.abs(u - u_prev)))
        norm_l1, norm_l21 = _objectives(u)
        record = IterationRecord(j=j, eps=eps, norm_l1=norm_l1, norm_l21=norm_l21, residual=residual_of(u), step=step)
        trace.append(record)
        logger.debug("irls %s j=%d eps=%.3e l1=%.6f l21=%.6f res=%.3e", mode, j, eps, norm_l1, norm_l21, record.residual)

        if record.residual > residual_limit(u):
            status = IrlsStatus.INFEASIBLE
            break
        if eps <= config.eps_bar * (1.0 + EPS_SLACK):
            status = IrlsStatus.CONVERGED
            break
        # Continuation relies on stalls to shrink eps, so they never terminate it.
        if config.eps_rule != "continuation" and step <= config.tol_u * max(1.0, float(np.max(np.abs(u)))):
            status = IrlsStatus.STALLED
            break
        weights = update_weights(u, eps, mode, config.weight_rule)
        u_prev = u
    else:
        if step <= SETTLED_STEP * max(1.0, float(np.max(np.abs(u)))):
            status = IrlsStatus.EPS_NOT_REACHED

    polish_steps = 0
    if config.polish and status in SUCCESS_STATUSES:
        objective = _objectives(u)[0 if mode == "l1" else 1]
        try:
            if mode == "l1":
                polished, polish_steps = purify_l1(Cs, bs, u)
            else:
                polished, polish_steps = polish_l21(Cs, bs, u, tau_abs)
        except SolverError as exc:
            logger.debug("support polish skipped: %s", exc)
        else:
            improved = _objectives(polished)[0 if mode == "l1" else 1]
            if improved <= objective * (1.0 + POLISH_SLACK) and residual_of(polished) <= residual_limit(polished):
                logger.debug("support polish: %d steps, objective %.9f -> %.9f", polish_steps, objective, improved)
                u = polished
            else:
                logger.debug("support polish rejected: objective %.9f -> %.9f", objective, improved)
                polish_steps = 0

    norm_l1, norm_l21 = _objectives(u)
    report = IrlsReport(
        U=u,
        mode=mode,
        norm_l1=norm_l1,
        norm_l21=norm_l21,
        residual=residual_of(u),
        iterations=j,
        status=status,
        eps_final=eps,
        weights=weights,
        eps_history=eps_history,
        trace=trace,
        polish_steps=polish_steps,
    )
    log = logger.info if report.succeeded else logger.warning
    log(
        "IRLS %s finished: status=%s iterations=%d objective=%.6f residual=%.3e eps=%.3e",
        mode, status.value, j, report.objective, report.residual, eps,
    )
    return report


def irls_l1(stacked: StackedSystem, config: Optional[IrlsConfig] = None) -> IrlsReport:
    return solve_irls(stacked.C, stacked.b, config, mode="l1")


def irls_l21(stacked: StackedSystem, config: Optional[IrlsConfig] = None) -> IrlsReport:
    return solve_irls(stacked.C, stacked.b, config, mode="l21")
