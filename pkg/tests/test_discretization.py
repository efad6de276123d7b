import math

import numpy as np
import pytest
from scipy.linalg import expm

from rendezvous.core.errors import DiscretizationError
from rendezvous.modules.discretization.schemas import (
    AnomalyGrid,
    ControlSchedule,
    DiscretizationOptions,
)
from rendezvous.modules.discretization.service import (
    discrete_stm,
    discretize,
    propagate,
    replay_continuous,
    stack,
    stage_dv_gains,
)
from rendezvous.modules.orbit.kinematics import anomaly_rate, bc_factor, continuous_matrices, stm, to_tilde
from rendezvous.modules.orbit.schemas import Frame, StateVector


def _random_tilde(rng, scale=1e3):
    return StateVector(rng.normal(scale=scale, size=6), Frame.TILDE)


def test_grid_nodes_and_validation():
    grid = AnomalyGrid(nu0=0.1 * math.pi, nuf=5.2, N=600)
    nodes = grid.nodes()
    assert nodes.size == 601
    assert nodes[0] == grid.nu0
    assert nodes[-1] == 5.2
    assert grid.node(600) == 5.2
    assert grid.alpha == pytest.approx((5.2 - 0.1 * math.pi) / 600)
    with pytest.raises(IndexError):
        grid.node(601)
    with pytest.raises(ValueError):
        AnomalyGrid(nu0=2.0, nuf=1.0, N=10)
    with pytest.raises(ValueError):
        AnomalyGrid(nu0=0.0, nuf=1.0, N=0)


def test_control_schedule_views_share_ordering():
    U = np.arange(12.0)
    schedule = ControlSchedule.from_stacked(U)
    assert schedule.N == 4
    np.testing.assert_array_equal(schedule.stages[2], [6.0, 7.0, 8.0])
    np.testing.assert_array_equal(schedule.stacked, U)
    assert schedule.norm_l1() == pytest.approx(66.0)
    assert schedule.norm_l21() == pytest.approx(sum(np.linalg.norm(U.reshape(4, 3), axis=1)))
    with pytest.raises(ValueError):
        ControlSchedule.from_stacked(np.ones(7))


@pytest.mark.critical
def test_circular_orbit_matches_matrix_exponential(circular_params):
    grid = AnomalyGrid(nu0=0.0, nuf=2.0, N=5)
    system = discretize(circular_params, grid)
    Ac, Bc = continuous_matrices(circular_params, 0.0)
    augmented = np.zeros((9, 9))
    augmented[:6, :6] = Ac
    augmented[:6, 6:] = Bc
    block = expm(augmented * grid.alpha)
    for k in range(grid.N):
        np.testing.assert_allclose(system.A[k], block[:6, :6], rtol=1e-10, atol=1e-12)
        scale = np.abs(block[:6, 6:]).max()
        assert np.abs(system.B[k] - block[:6, 6:]).max() <= 1e-9 * scale


def test_impulsive_input_is_velocity_jump(gto_params):
    grid = AnomalyGrid(nu0=0.5, nuf=2.0, N=3)
    system = discretize(gto_params, grid, DiscretizationOptions(input_model="impulsive"))
    dv = np.array([0.4, -1.0, 0.25])
    nu0 = grid.node(0)
    jumped = to_tilde(gto_params, StateVector(np.concatenate([np.zeros(3), dv])), nu0)
    expected = stm(gto_params, nu0, grid.node(1)) @ jumped.values
    np.testing.assert_allclose(system.B[0] @ dv, expected, rtol=1e-12, atol=1e-12)


@pytest.mark.critical
def test_stacking_matches_propagation(gto_system, rng):
    x0 = _random_tilde(rng)
    xf = _random_tilde(rng)
    stacked = stack(gto_system, x0, xf)
    assert stacked.C.shape == (6, 3 * gto_system.N)
    np.testing.assert_allclose(stacked.b, xf.values - stacked.beta)
    for _ in range(100):
        x0 = _random_tilde(rng)
        U = rng.normal(scale=50.0, size=3 * gto_system.N)
        terminal = propagate(gto_system, x0, ControlSchedule.from_stacked(U))[-1].values
        predicted = stack(gto_system, x0, xf).beta + stacked.C @ U
        assert np.linalg.norm(terminal - predicted) <= 1e-9 * np.linalg.norm(terminal)


def test_discrete_stm_products(gto_system):
    np.testing.assert_array_equal(discrete_stm(gto_system, 3, 3), np.eye(6))
    np.testing.assert_allclose(discrete_stm(gto_system, 2, 0), gto_system.A[1] @ gto_system.A[0])
    full = discrete_stm(gto_system, gto_system.N, 0)
    grid = gto_system.grid
    expected = stm(gto_system.params, grid.nu0, grid.nuf)
    assert np.linalg.norm(full - expected) <= 1e-9 * np.linalg.norm(expected)


def test_discrete_stm_index_errors(gto_system):
    with pytest.raises(DiscretizationError) as excinfo:
        discrete_stm(gto_system, 1, 2)
    assert excinfo.value.code == "index-order"
    with pytest.raises(DiscretizationError):
        discrete_stm(gto_system, gto_system.N + 1, 0)


def test_stack_requires_tilde_frame(gto_system):
    with pytest.raises(DiscretizationError) as excinfo:
        stack(gto_system, StateVector(np.ones(6)), StateVector.zeros(Frame.TILDE))
    assert excinfo.value.code == "frame-mismatch"


def test_propagate_length_mismatch(gto_system):
    with pytest.raises(DiscretizationError) as excinfo:
        propagate(gto_system, StateVector.zeros(Frame.TILDE), ControlSchedule.zeros(gto_system.N + 1))
    assert excinfo.value.code == "length-mismatch"


def test_quadrature_self_check_flags_coarse_rule(gto_params, small_grid):
    options = DiscretizationOptions(gauss_nodes=1, rtol=1e-12)
    with pytest.raises(DiscretizationError) as excinfo:
        discretize(gto_params, small_grid, options)
    assert excinfo.value.code == "quadrature-nonconvergence"
    # Disabled self-check accepts the same rule.
    discretize(gto_params, small_grid, DiscretizationOptions(gauss_nodes=1, self_check=False))


def test_invalid_input_model():
    with pytest.raises(ValueError):
        DiscretizationOptions(input_model="zoh")


def test_stage_dv_gains(circular_params, gto_params, small_grid):
    grid = AnomalyGrid(nu0=0.0, nuf=1.0, N=4)
    system = discretize(circular_params, grid)
    expected = grid.alpha * bc_factor(circular_params, 0.0) * anomaly_rate(circular_params, 0.0)
    np.testing.assert_allclose(stage_dv_gains(circular_params, system), np.full(4, expected), rtol=1e-12)
    impulsive = discretize(gto_params, small_grid, DiscretizationOptions(input_model="impulsive"))
    np.testing.assert_array_equal(stage_dv_gains(gto_params, impulsive), np.ones(small_grid.N))


@pytest.mark.parametrize("input_model", ["quadrature", "impulsive"])
def test_continuous_replay_agrees_with_discrete_model(gto_params, small_grid, rng, input_model):
    system = discretize(gto_params, small_grid, DiscretizationOptions(input_model=input_model))
    x0 = _random_tilde(rng)
    scale = 1.0 if input_model == "impulsive" else 10.0 / bc_factor(gto_params, 1.0)
    schedule = ControlSchedule.from_stacked(rng.normal(scale=scale, size=3 * small_grid.N))
    discrete = propagate(system, x0, schedule)[-1].values
    replayed = replay_continuous(gto_params, system, x0, schedule).values
    assert np.linalg.norm(replayed - discrete) <= 1e-6 * np.linalg.norm(discrete)
