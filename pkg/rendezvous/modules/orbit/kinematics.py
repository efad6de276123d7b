"""True-anomaly kinematics of the target orbit and the Yamanaka-Ankersen STM.

All functions are pure; the independent variable is the true anomaly nu
(radians, never wrapped).
"""
from __future__ import annotations

import logging
import math
from typing import Tuple

import numpy as np
from scipy.integrate import quad

from rendezvous.core.errors import OrbitError
from rendezvous.modules.orbit.schemas import AnomalyPoint, Frame, OrbitParams, StateVector

logger = logging.getLogger(__name__)

J_ABS_TOL = 1e-12
TILDE_ECCENTRICITY_LIMIT = 1.0 / math.sqrt(2.0)


def check_tilde_validity(params: OrbitParams) -> bool:
    """Warn when rho - rho' can vanish; the STM itself stays defined for e < 1."""
    if params.e >= TILDE_ECCENTRICITY_LIMIT:
        logger.warning(
            "Eccentricity %.5f >= 1/sqrt(2): rho - rho' has roots, tilde transformation is not globally well posed.",
            params.e,
        )
        return False
    return True


def j_integral(e: float, nu0: float, nu: float) -> float:
    if nu == nu0:
        return 0.0
    if e == 0.0:
        return nu - nu0
    value, _ = quad(
        lambda tau: 1.0 / (1.0 + e * math.cos(tau)) ** 2,
        nu0,
        nu,
        epsabs=J_ABS_TOL,
        epsrel=1e-13,
        limit=200,
    )
    return value


def anomaly_rate(params: OrbitParams, nu: float) -> float:
    rho = 1.0 + params.e * math.cos(nu)
    return params.n * rho**2 / (1.0 - params.e**2) ** 1.5


def eval_anomaly(params: OrbitParams, nu: float, nu0: float) -> AnomalyPoint:
    e = params.e
    sin_nu, cos_nu = math.sin(nu), math.cos(nu)
    rho = 1.0 + e * cos_nu
    return AnomalyPoint(
        nu=nu,
        rho=rho,
        rho_prime=-e * sin_nu,
        s=rho * sin_nu,
        c=rho * cos_nu,
        s_prime=cos_nu + e * math.cos(2.0 * nu),
        c_prime=-(sin_nu + e * math.sin(2.0 * nu)),
        omega=anomaly_rate(params, nu),
        J=j_integral(e, nu0, nu),
    )


def bc_factor(params: OrbitParams, nu: float) -> float:
    rho = 1.0 + params.e * math.cos(nu)
    return 1.0 / (params.gamma**3 * rho**4)


def continuous_matrices(params: OrbitParams, nu: float) -> Tuple[np.ndarray, np.ndarray]:
    rho = 1.0 + params.e * math.cos(nu)
    Ac = np.zeros((6, 6))
    Ac[0, 3] = Ac[1, 4] = Ac[2, 5] = 1.0
    Ac[3, 5] = 2.0
    Ac[4, 1] = -1.0
    Ac[5, 2] = 3.0 / rho
    Ac[5, 3] = -2.0
    Bc = np.zeros((6, 3))
    Bc[3:, :] = bc_factor(params, nu) * np.eye(3)
    return Ac, Bc


def l_matrix(params: OrbitParams, nu: float) -> Tuple[np.ndarray, np.ndarray]:
    """Physical -> tilde map L at nu, with its closed-form inverse."""
    rho = 1.0 + params.e * math.cos(nu)
    rho_prime = -params.e * math.sin(nu)
    omega = anomaly_rate(params, nu)
    if rho <= 0.0 or omega <= 0.0:
        raise OrbitError("singular-l", f"L is singular at nu={nu}: rho={rho}, omega={omega}")
    L = np.zeros((6, 6))
    L[:3, :3] = rho * np.eye(3)
    L[3:, :3] = rho_prime * np.eye(3)
    L[3:, 3:] = (rho / omega) * np.eye(3)
    return L, l_inverse(params, nu)


def l_inverse(params: OrbitParams, nu: float) -> np.ndarray:
    # x = xt / rho ; xdot = (xt' - rho' x) * omega / rho
    rho = 1.0 + params.e * math.cos(nu)
    rho_prime = -params.e * math.sin(nu)
    omega = anomaly_rate(params, nu)
    if rho <= 0.0 or omega <= 0.0:
        raise OrbitError("singular-l", f"L is singular at nu={nu}: rho={rho}, omega={omega}")
    Linv = np.zeros((6, 6))
    Linv[:3, :3] = np.eye(3) / rho
    Linv[3:, :3] = -(rho_prime * omega / rho**2) * np.eye(3)
    Linv[3:, 3:] = (omega / rho) * np.eye(3)
    return Linv


def to_tilde(params: OrbitParams, state: StateVector, nu: float) -> StateVector:
    if state.frame == Frame.TILDE:
        return state
    L, _ = l_matrix(params, nu)
    return StateVector(L @ state.values, Frame.TILDE)


def to_physical(params: OrbitParams, state: StateVector, nu: float) -> StateVector:
    if state.frame == Frame.PHYSICAL:
        return state
    return StateVector(l_inverse(params, nu) @ state.values, Frame.PHYSICAL)


def fundamental_matrix(e: float, nu: float, J: float) -> np.ndarray:
    """Phi_nu: rows are tilde states, columns are integration constants."""
    sin_nu, cos_nu = math.sin(nu), math.cos(nu)
    rho = 1.0 + e * cos_nu
    s, c = rho * sin_nu, rho * cos_nu
    s_p = cos_nu + e * math.cos(2.0 * nu)
    c_p = -(sin_nu + e * math.sin(2.0 * nu))
    return np.array([
        [1.0, 0.0, -c * (1.0 + 1.0 / rho), s * (1.0 + 1.0 / rho), 0.0, 3.0 * rho**2 * J],
        [0.0, c / rho, 0.0, 0.0, s / rho, 0.0],
        [0.0, 0.0, s, c, 0.0, 2.0 - 3.0 * e * s * J],
        [0.0, 0.0, 2.0 * s, 2.0 * c - e, 0.0, 3.0 * (1.0 - 2.0 * e * s * J)],
        [0.0, -s / rho, 0.0, 0.0, c / rho, 0.0],
        [0.0, 0.0, s_p, c_p, 0.0, -3.0 * e * (s_p * J + s / rho**2)],
    ])


def fundamental_inverse(e: float, nu: float) -> np.ndarray:
    """Inverse of Phi_nu at J = 0.

    Out-of-plane rows are the transpose of the forward rotation block so
    that Phi(nu0, nu0) = I.
    """
    sin_nu, cos_nu = math.sin(nu), math.cos(nu)
    rho = 1.0 + e * cos_nu
    s, c = rho * sin_nu, rho * cos_nu
    k = 1.0 - e**2
    return np.array([
        [k, 0.0, 3.0 * e * (s / rho) * (1.0 + 1.0 / rho), -e * s * (1.0 + 1.0 / rho), 0.0, -e * c + 2.0],
        [0.0, c * k / rho, 0.0, 0.0, -s * k / rho, 0.0],
        [0.0, 0.0, -3.0 * (s / rho) * (1.0 + e**2 / rho), s * (1.0 + 1.0 / rho), 0.0, c - 2.0 * e],
        [0.0, 0.0, -3.0 * (c / rho + e), c * (1.0 + 1.0 / rho) + e, 0.0, -s],
        [0.0, s * k / rho, 0.0, 0.0, c * k / rho, 0.0],
        [0.0, 0.0, 3.0 * rho + e**2 - 1.0, -(rho**2), 0.0, e * s],
    ]) / k


def stm(params: OrbitParams, nu0: float, nu: float) -> np.ndarray:
    if nu == nu0:
        return np.eye(6)
    J = j_integral(params.e, nu0, nu)
    return fundamental_matrix(params.e, nu, J) @ fundamental_inverse(params.e, nu0)
