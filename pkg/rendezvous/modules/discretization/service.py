from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp

from rendezvous.core.errors import DiscretizationError
from rendezvous.modules.discretization.schemas import (
    AnomalyGrid,
    ControlSchedule,
    DiscreteLTV,
    DiscretizationOptions,
    StackedSystem,
)
from rendezvous.modules.orbit.kinematics import (
    anomaly_rate,
    bc_factor,
    continuous_matrices,
    stm,
)
from rendezvous.modules.orbit.schemas import CONTROL_DIM, STATE_DIM, Frame, OrbitParams, StateVector

logger = logging.getLogger(__name__)

REPLAY_RTOL = 1e-10
REPLAY_ATOL = 1e-9


def _velocity_jump(params: OrbitParams, nu: float) -> np.ndarray:
    # Tilde-frame effect of a unit physical velocity increment at nu.
    rho = 1.0 + params.e * np.cos(nu)
    jump = np.zeros((STATE_DIM, CONTROL_DIM))
    jump[3:, :] = (rho / anomaly_rate(params, nu)) * np.eye(CONTROL_DIM)
    return jump


def _gauss_input_matrix(params: OrbitParams, nu_k: float, nu_next: float, nodes: int) -> np.ndarray:
    x, w = leggauss(nodes)
    half = 0.5 * (nu_next - nu_k)
    mid = 0.5 * (nu_next + nu_k)
    B = np.zeros((STATE_DIM, CONTROL_DIM))
    for xi, wi in zip(x, w):
        sigma = mid + half * xi
        _, Bc = continuous_matrices(params, sigma)
        B += wi * stm(params, sigma, nu_next) @ Bc
    return half * B


def _checked_input_matrix(params: OrbitParams, k: int, nu_k: float, nu_next: float, options: DiscretizationOptions) -> np.ndarray:
    B = _gauss_input_matrix(params, nu_k, nu_next, options.gauss_nodes)
    if not options.self_check:
        return B
    refined = _gauss_input_matrix(params, nu_k, nu_next, 2 * options.gauss_nodes)
    scale = max(float(np.abs(refined).max()), np.finfo(float).tiny)
    change = float(np.abs(refined - B).max()) / scale
    if change > options.rtol:
        raise DiscretizationError(
            "quadrature-nonconvergence",
            f"B({k}) changed by {change:.3e} relative when doubling Gauss nodes",
            {"stage": k, "change": change, "nodes": options.gauss_nodes},
        )
    return B


def discretize(
    params: OrbitParams,
    grid: AnomalyGrid,
    options: Optional[DiscretizationOptions] = None,
) -> DiscreteLTV:
    """Build A(k) = Phi(node(k+1), node(k)) and B(k) for every stage.

    quadrature: B(k) is the Gauss-Legendre integral of Phi(node(k+1), s) Bc(s).
    impulsive:  B(k) = A(k) [0; (rho/omega) I], u(k) a velocity jump at node(k) in m/s.
    """
    options = options or DiscretizationOptions()
    nodes = grid.nodes()
    A = np.empty((grid.N, STATE_DIM, STATE_DIM))
    B = np.empty((grid.N, STATE_DIM, CONTROL_DIM))
    for k in range(grid.N):
        nu_k, nu_next = float(nodes[k]), float(nodes[k + 1])
        A[k] = stm(params, nu_k, nu_next)
        if options.input_model == "impulsive":
            B[k] = A[k] @ _velocity_jump(params, nu_k)
        else:
            B[k] = _checked_input_matrix(params, k, nu_k, nu_next, options)
    logger.info(
        "Discretized %d stages (%s inputs) over [%.4f, %.4f] rad, alpha=%.6f",
        grid.N,
        options.input_model,
        grid.nu0,
        grid.nuf,
        grid.alpha,
    )
    return DiscreteLTV(params=params, grid=grid, A=A, B=B, input_model=options.input_model)


def discrete_stm(sys: DiscreteLTV, k: int, m: int) -> np.ndarray:
    """Phi_d(k, m) = A(k-1) ... A(m); identity when k == m."""
    if k < m:
        raise DiscretizationError("index-order", f"discrete STM needs m <= k, got k={k}, m={m}")
    if m < 0 or k > sys.N:
        raise DiscretizationError("index-order", f"stages must lie in [0, {sys.N}], got k={k}, m={m}")
    product = np.eye(STATE_DIM)
    for i in range(m, k):
        product = sys.A[i] @ product
    return product


def _require_tilde(state: StateVector, name: str) -> None:
    if state.frame != Frame.TILDE:
        raise DiscretizationError("frame-mismatch", f"{name} must be in the tilde frame, got {state.frame.value}")


def stack(sys: DiscreteLTV, x0: StateVector, xf: StateVector) -> StackedSystem:
    _require_tilde(x0, "x0")
    _require_tilde(xf, "xf")
    N = sys.N
    C = np.empty((STATE_DIM, CONTROL_DIM * N))
    # Backward sweep: tail = Phi_d(N, tau + 1).
    tail = np.eye(STATE_DIM)
    for tau in range(N - 1, -1, -1):
        C[:, CONTROL_DIM * tau:CONTROL_DIM * (tau + 1)] = tail @ sys.B[tau]
        tail = tail @ sys.A[tau]
    beta = tail @ x0.values
    b = xf.values - beta
    return StackedSystem(C=C, beta=beta, b=b, x0=x0, xf=xf)


def propagate(sys: DiscreteLTV, x0: StateVector, U: ControlSchedule) -> List[StateVector]:
    _require_tilde(x0, "x0")
    if U.N != sys.N:
        raise DiscretizationError("length-mismatch", f"control schedule has {U.N} stages, system has {sys.N}")
    states = [x0]
    x = x0.values
    for k in range(sys.N):
        x = sys.A[k] @ x + sys.B[k] @ U.stages[k]
        states.append(StateVector(x, Frame.TILDE))
    return states


def stage_dv_gains(params: OrbitParams, sys: DiscreteLTV, nodes: Optional[int] = None) -> np.ndarray:
    """Physical velocity change per unit control held over each stage."""
    if sys.input_model == "impulsive":
        return np.ones(sys.N)
    x, w = leggauss(nodes or DiscretizationOptions().gauss_nodes)
    grid_nodes = sys.grid.nodes()
    gains = np.empty(sys.N)
    for k in range(sys.N):
        half = 0.5 * (grid_nodes[k + 1] - grid_nodes[k])
        mid = 0.5 * (grid_nodes[k + 1] + grid_nodes[k])
        sigma = mid + half * x
        rho = 1.0 + params.e * np.cos(sigma)
        rate = np.array([anomaly_rate(params, s) for s in sigma])
        factor = np.array([bc_factor(params, s) for s in sigma])
        gains[k] = half * float(np.sum(w * factor * rate / rho))
    return gains


def replay_continuous(
    params: OrbitParams,
    sys: DiscreteLTV,
    x0: StateVector,
    U: ControlSchedule,
) -> StateVector:
    """Integrate the continuous tilde dynamics under U and return the state at nuf."""
    _require_tilde(x0, "x0")
    if U.N != sys.N:
        raise DiscretizationError("length-mismatch", f"control schedule has {U.N} stages, system has {sys.N}")
    nodes = sys.grid.nodes()
    impulsive = sys.input_model == "impulsive"
    x = np.array(x0.values, dtype=float)
    for k in range(sys.N):
        u = U.stages[k]
        if impulsive:
            x = x + _velocity_jump(params, float(nodes[k])) @ u

        def rhs(nu: float, state: np.ndarray, u: np.ndarray = u) -> np.ndarray:
            Ac, Bc = continuous_matrices(params, nu)
            if impulsive:
                return Ac @ state
            return Ac @ state + Bc @ u

        sol = solve_ivp(
            rhs,
            (float(nodes[k]), float(nodes[k + 1])),
            x,
            method="DOP853",
            rtol=REPLAY_RTOL,
            atol=REPLAY_ATOL,
        )
        if not sol.success:
            raise DiscretizationError("replay-failed", f"continuous replay failed on stage {k}: {sol.message}")
        x = sol.y[:, -1]
    return StateVector(x, Frame.TILDE)
