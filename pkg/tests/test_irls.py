import numpy as np
import pytest

from rendezvous.core.bootstrap import register_solvers
from rendezvous.core.errors import SolverError
from rendezvous.modules.irls.schemas import IrlsConfig, IrlsStatus, WeightState
from rendezvous.modules.irls.service import (
    block_norms,
    eps_update,
    gramian,
    gramian_recursion,
    irls_l1,
    polish_l21,
    purify_l1,
    solve_irls,
    update_weights,
    weighted_min_norm,
)
from rendezvous.modules.oracle.service import suite_config
from rendezvous.modules.oracle.simplex import solve_l1_lp


def _constant_stack(A, B, N):
    blocks = [np.linalg.matrix_power(A, N - 1 - k) @ B for k in range(N)]
    return np.hstack(blocks)


def test_weighted_min_norm_toy():
    C = np.array([[1.0, 1.0]])
    np.testing.assert_allclose(weighted_min_norm(C, np.ones(2), np.array([2.0])), [1.0, 1.0])
    np.testing.assert_allclose(weighted_min_norm(C, np.array([1.0, 4.0]), np.array([2.0])), [1.6, 0.4])


def test_weighted_min_norm_zero_rhs():
    C = np.ones((2, 6))
    np.testing.assert_array_equal(weighted_min_norm(C, np.ones(6), np.zeros(2)), np.zeros(6))


@pytest.mark.critical
def test_weighted_min_norm_matches_kkt(rng):
    C = rng.standard_normal((6, 15))
    b = rng.standard_normal(6)
    w = rng.uniform(0.5, 3.0, size=15)
    u = weighted_min_norm(C, w, b)
    np.testing.assert_allclose(C @ u, b, atol=1e-10)
    # Stationarity: W u lies in the row space of C.
    lam, *_ = np.linalg.lstsq(C.T, w * u, rcond=None)
    np.testing.assert_allclose(C.T @ lam, w * u, atol=1e-10)
    scaled = C / np.sqrt(w)
    expected = np.linalg.pinv(scaled) @ b / np.sqrt(w)
    np.testing.assert_allclose(u, expected, rtol=1e-9, atol=1e-12)


def test_singular_gramian_is_reported():
    C = np.vstack([np.arange(1.0, 7.0), np.arange(1.0, 7.0)])
    with pytest.raises(SolverError) as excinfo:
        weighted_min_norm(C, np.ones(6), np.array([1.0, 1.0]))
    assert excinfo.value.code == "singular-gramian"


@pytest.mark.critical
def test_gramian_recursion_matches_direct_product(rng):
    A = 0.9 * np.linalg.qr(rng.standard_normal((6, 6)))[0]
    B = rng.standard_normal((6, 3))
    N = 8
    C = _constant_stack(A, B, N)
    weights = WeightState(rng.uniform(0.2, 5.0, size=3 * N))
    direct = gramian(C, weights, cross_check=(A, B))
    np.testing.assert_allclose(gramian_recursion(A, B, weights), direct, rtol=1e-10, atol=1e-12)
    with pytest.raises(SolverError) as excinfo:
        gramian(C, weights, cross_check=(A, 2.0 * B))
    assert excinfo.value.code == "gramian-mismatch"


def test_eps_update_rules():
    u = np.array([0.2, -3.0, 0.5])
    assert eps_update(1.0, u, rule="max") == pytest.approx(0.5)
    assert eps_update(1.0, np.array([-1.0, -2.0]), rule="max") == 0.0
    assert eps_update(1.0, np.arange(1.0, 11.0), rule="sorted", r=6) == pytest.approx(0.4)
    assert eps_update(0.1, np.arange(1.0, 11.0), rule="sorted", r=6) == pytest.approx(0.1)
    assert eps_update(0.3, np.ones(4), rule="sorted", r=6) == 0.3
    assert eps_update(0.01, u, rule="continuation") == 0.01
    assert eps_update(0.01, u, rule="continuation", u_prev=u + 1e-5) == pytest.approx(1e-3)
    assert eps_update(0.01, u, rule="continuation", u_prev=u + 1.0) == 0.01
    with pytest.raises(ValueError):
        eps_update(1.0, u, rule="bogus")


def test_update_weights_by_mode():
    u = np.array([3.0, 4.0, 0.0, 0.0, 0.0, 0.0])
    l1 = update_weights(u, 1e-3, mode="l1")
    np.testing.assert_allclose(l1.w[:2], [1.0 / 3.0, 1.0 / 4.0], rtol=1e-6)
    block = update_weights(u, 1e-3, mode="l21", weight_rule="block")
    np.testing.assert_allclose(block.blocks()[0], np.full(3, 1.0 / 5.0), rtol=1e-6)
    np.testing.assert_allclose(block.blocks()[1], np.full(3, 1e3))
    entrywise = update_weights(u, 1e-3, mode="l21", weight_rule="entrywise")
    np.testing.assert_allclose(entrywise.w[:2], [3.0**-0.5, 4.0**-0.5], rtol=1e-6)
    with pytest.raises(ValueError):
        update_weights(u, 1e-3, mode="l21", weight_rule="nonsense")


def test_block_norms():
    np.testing.assert_allclose(block_norms(np.array([3.0, 4.0, 0.0, 0.0, 0.0, 2.0])), [5.0, 2.0])


def test_weight_state_rejects_nonpositive():
    with pytest.raises(ValueError):
        WeightState(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        WeightState(np.array([1.0, np.inf]))


def test_irls_l1_recovers_sparse_toy():
    C = np.array([[1.0, 2.0, 3.0]])
    report = solve_irls(C, np.array([6.0]), IrlsConfig(jmax=2000), mode="l1")
    assert report.status == IrlsStatus.CONVERGED
    assert report.succeeded
    assert report.norm_l1 == pytest.approx(2.0, rel=1e-4)
    assert report.U[2] == pytest.approx(2.0, rel=1e-4)
    assert report.residual < 1e-9
    assert report.eps_history == sorted(report.eps_history, reverse=True)


def test_irls_l21_selects_cheapest_block():
    C = np.array([
        [1.0, 0.0, 0.0, 2.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 2.0, 0.0],
    ])
    b = np.array([2.0, 2.0])
    config = IrlsConfig(jmax=5000, eps_rule="continuation", tau=0.0)
    report = solve_irls(C, b, config, mode="l21")
    assert report.succeeded
    assert report.norm_l21 == pytest.approx(np.sqrt(2.0), rel=1e-3)
    np.testing.assert_allclose(report.U, [0.0, 0.0, 0.0, 1.0, 1.0, 0.0], atol=1e-2)


def test_zero_target_short_circuits():
    report = solve_irls(np.ones((6, 12)), np.zeros(6), mode="l21")
    assert report.status == IrlsStatus.CONVERGED
    assert report.iterations == 1
    np.testing.assert_array_equal(report.U, np.zeros(12))


def test_iteration_cap_is_reported(rng):
    C = rng.standard_normal((6, 30))
    b = C @ rng.standard_normal(30)
    report = solve_irls(C, b, IrlsConfig(jmax=1), mode="l1")
    assert report.iterations == 1
    assert not report.succeeded
    assert report.status in (IrlsStatus.MAX_ITERATIONS, IrlsStatus.EPS_NOT_REACHED)
    assert report.residual < 1e-9
    assert len(report.trace) == 1


def test_row_scaling_leaves_iterates_unchanged(rng):
    C = rng.standard_normal((6, 24))
    b = C @ rng.standard_normal(24)
    D = np.diag(10.0 ** rng.uniform(-3, 3, size=6))
    config = IrlsConfig(jmax=50)
    plain = solve_irls(C, b, config)
    scaled = solve_irls(D @ C, D @ b, config)
    np.testing.assert_allclose(scaled.U, plain.U, rtol=1e-6, atol=1e-9)


@pytest.mark.critical
def test_irls_l1_reaches_lp_optimum(rng):
    config = suite_config()
    for _ in range(5):
        C = rng.standard_normal((6, 18))
        b = C @ rng.standard_normal(18)
        lp = solve_l1_lp(C, b)
        report = solve_irls(C, b, config, mode="l1")
        assert lp.objective - 1e-9 <= report.norm_l1 <= (1.0 + 1e-3) * lp.objective


def test_invalid_config_and_mode():
    with pytest.raises(ValueError):
        IrlsConfig(weight_rule="other")
    with pytest.raises(ValueError):
        IrlsConfig(eps_rule="fast")
    with pytest.raises(ValueError):
        IrlsConfig(unknown=1)
    with pytest.raises(ValueError):
        IrlsConfig(weight_rule="max")
    with pytest.raises(ValueError):
        solve_irls(np.ones((1, 3)), np.ones(1), mode="l2")


def test_solver_registry():
    registry = register_solvers()
    assert set(registry.list_solvers()) == {"l1", "l21"}
    assert registry.get("l1").solve is irls_l1
    with pytest.raises(KeyError):
        registry.get("l0")


@pytest.mark.parametrize("alpha", [-3.7, 1e3])
def test_iterates_scale_with_target(rng, alpha):
    C = rng.standard_normal((6, 24))
    b = C @ rng.standard_normal(24)
    base = IrlsConfig(jmax=30, eps_bar=1e-30, tol_u=1e-300)
    scaled_config = base.model_copy(update={"eps0": abs(alpha)})
    plain = solve_irls(C, b, base)
    scaled = solve_irls(C, alpha * b, scaled_config)
    assert scaled.iterations == plain.iterations == 30
    np.testing.assert_allclose(scaled.U, alpha * plain.U, rtol=1e-9, atol=1e-12 * abs(alpha))


def test_rule_aliases_normalize():
    config = IrlsConfig(weight_rule="Paper", eps_rule="paper")
    assert config.weight_rule == "entrywise"
    assert config.eps_rule == "max"
    assert IrlsConfig(weight_rule="block-norm", eps_rule="sorted-r").model_dump()["weight_rule"] == "block"
    assert IrlsConfig(eps_rule="paper-max").eps_rule == "max"


def test_unreachable_target_is_not_hidden_by_regularizer(rng):
    # One stage cannot span six state components; tau must not mask that.
    C = rng.standard_normal((6, 3))
    b = C @ rng.standard_normal(3)
    for tau in (0.0, 1e-12, 1e-6):
        with pytest.raises(SolverError) as excinfo:
            solve_irls(C, b, IrlsConfig(tau=tau), mode="l1")
        assert excinfo.value.code == "singular-gramian"
    dependent = rng.standard_normal((6, 12))
    dependent[5] = dependent[4]
    with pytest.raises(SolverError) as excinfo:
        weighted_min_norm(dependent, np.ones(12), dependent @ np.ones(12), tau=1e-9)
    assert excinfo.value.code == "singular-gramian"


def test_constraint_violation_is_not_success(rng):
    C = rng.standard_normal((6, 24))
    b = C @ rng.standard_normal(24)
    report = solve_irls(C, b, IrlsConfig(tau=1e3), mode="l1")
    assert report.status == IrlsStatus.INFEASIBLE
    assert not report.succeeded
    assert report.iterations == 1
    assert report.residual > 1e-9
    assert report.polish_steps == 0


@pytest.mark.critical
@pytest.mark.parametrize("mode", ["l1", "l21"])
def test_every_iterate_satisfies_constraint(rng, mode):
    C = rng.standard_normal((6, 30))
    b = 10.0 * C @ rng.standard_normal(30)
    report = solve_irls(C, b, IrlsConfig(jmax=300), mode=mode)
    assert report.trace
    assert max(record.residual for record in report.trace) <= 1e-9
    assert report.residual <= 1e-9


@pytest.mark.parametrize("mode,rule", [("l1", "block"), ("l21", "block"), ("l21", "entrywise")])
def test_reweighted_step_lowers_weighted_energy(rng, mode, rule):
    C = rng.standard_normal((6, 24))
    b = C @ rng.standard_normal(24)
    u = weighted_min_norm(C, np.ones(24), b)
    eps = 0.5
    for _ in range(12):
        weights = update_weights(u, eps, mode, rule)
        nxt = weighted_min_norm(C, weights, b)
        before = float(u @ (weights.w * u))
        after = float(nxt @ (weights.w * nxt))
        assert after <= before * (1.0 + 1e-12)
        u = nxt
        eps *= 0.5


def test_purify_l1_reaches_independent_support(rng):
    C = rng.standard_normal((3, 8))
    u = rng.uniform(0.5, 2.0, size=8) * rng.choice([-1.0, 1.0], size=8)
    b = C @ u
    v, steps = purify_l1(C, b, u)
    assert steps == 5
    assert np.count_nonzero(v) == 3
    assert np.abs(v).sum() <= np.abs(u).sum() + 1e-12
    np.testing.assert_allclose(C @ v, b, atol=1e-10)


def test_polish_l21_drops_shrinking_block():
    C = np.array([
        [1.0, 0.0, 0.0, 2.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 2.0, 0.0],
    ])
    b = np.array([2.0, 2.0])
    start = weighted_min_norm(C, np.ones(6), b)
    np.testing.assert_allclose(start, [0.4, 0.4, 0.0, 0.8, 0.8, 0.0])
    v, steps = polish_l21(C, b, start)
    assert steps > 1
    np.testing.assert_allclose(v, [0.0, 0.0, 0.0, 1.0, 1.0, 0.0], atol=1e-12)


def test_polish_can_be_disabled(rng):
    C = rng.standard_normal((6, 18))
    b = C @ rng.standard_normal(18)
    config = suite_config()
    raw = solve_irls(C, b, config.model_copy(update={"polish": False}), mode="l21")
    polished = solve_irls(C, b, config, mode="l21")
    assert raw.polish_steps == 0
    assert polished.succeeded
    assert polished.polish_steps > 0
    assert polished.norm_l21 <= raw.norm_l21 * (1.0 + 1e-9)
    assert polished.iterations == raw.iterations


def test_l21_sorted_rule_ranks_stage_norms(rng):
    C = rng.standard_normal((3, 36))
    b = C @ rng.standard_normal(36)
    report = solve_irls(C, b, IrlsConfig(jmax=1, tau=0.0, r=2, polish=False), mode="l21")
    stage_norms = np.sort(block_norms(weighted_min_norm(C, np.ones(36), b)))[::-1]
    assert report.eps_history[1] == pytest.approx(min(1.0, stage_norms[2] / 12), rel=1e-9)
