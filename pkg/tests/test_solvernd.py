import numpy as np
import pytest

from cpd.core.errors import InputError
from cpd.solver1d import kkt_residual, solve_fused_lasso
from cpd.solvernd import group_kkt_residual, group_objective, solve_group_fused_lasso


def _staircase(rng, n=60, p=3, noise=0.01):
    steps = np.array([[0.0] * p, [2.0] + [0.0] * (p - 1), [2.0, -2.0] + [0.0] * (p - 2)])
    X = np.repeat(steps, [n // 3, n // 3, n - 2 * (n // 3)], axis=0)
    return X + rng.normal(scale=noise, size=X.shape)


def test_p1_matches_scalar_solver(rng):
    for _ in range(50):
        n = int(rng.integers(2, 31))
        y = rng.uniform(-2.0, 2.0, size=n)
        lam = float(rng.choice([0.5, 1.0, 2.0]))
        sol = solve_group_fused_lasso(y[:, None], lam, tol=1e-11)
        assert sol.converged
        assert sol.duality_gap <= 1e-8
        np.testing.assert_allclose(sol.Xhat[:, 0], solve_fused_lasso(y, lam).xhat, atol=1e-6)


def test_plain_block_ascent_matches_scalar_solver(rng):
    for _ in range(20):
        n = int(rng.integers(2, 11))
        y = rng.uniform(-2.0, 2.0, size=n)
        sol = solve_group_fused_lasso(y, 1.0, tol=1e-12, max_iter=200_000, method="bcd")
        assert sol.converged
        np.testing.assert_allclose(sol.Xhat[:, 0], solve_fused_lasso(y, 1.0).xhat, atol=1e-5)


def test_dual_history_is_monotone(rng):
    Y = rng.normal(size=(25, 2))
    sol = solve_group_fused_lasso(Y, 1.5, tol=1e-10, method="bcd", record_history=True)
    h = np.asarray(sol.dual_history)
    assert h.size == sol.iterations
    assert np.all(np.diff(h) >= -1e-10 * (1.0 + np.abs(h[1:])))


def test_rotation_equivariance(rng):
    Y = _staircase(rng, p=2)
    theta = 0.7
    Q = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    a = solve_group_fused_lasso(Y, 3.0, tol=1e-11)
    b = solve_group_fused_lasso(Y @ Q, 3.0, tol=1e-11)
    np.testing.assert_allclose(b.Xhat, a.Xhat @ Q, atol=1e-6)
    assert b.objective == pytest.approx(a.objective, rel=1e-9)


def test_gap_certificate_and_structure(rng):
    Y = _staircase(rng)
    sol = solve_group_fused_lasso(Y, 4.0)
    assert sol.converged
    assert sol.duality_gap <= 1e-8 * (1.0 + abs(sol.objective))
    assert sol.objective == pytest.approx(group_objective(Y, sol.Xhat, 4.0))
    assert sol.jump_set == (19, 39)


def test_kkt_residual_vanishes_at_solution(rng):
    Y = _staircase(rng)
    sol = solve_group_fused_lasso(Y, 4.0, tol=1e-12)
    assert group_kkt_residual(Y, 4.0, sol.Xhat) <= 1e-4
    assert group_kkt_residual(Y, 4.0, Y) > 0.1


def test_kkt_residual_p1_is_scalar_residual(rng):
    y = rng.normal(size=12)
    x = solve_fused_lasso(y, 0.7).xhat + rng.normal(scale=0.01, size=12)
    assert group_kkt_residual(y[:, None], 0.7, x[:, None]) == kkt_residual(y, 0.7, x)


def test_lambda_zero_and_single_row(rng):
    Y = rng.normal(size=(8, 3))
    sol = solve_group_fused_lasso(Y, 0.0)
    np.testing.assert_array_equal(sol.Xhat, Y)
    assert sol.converged and sol.iterations == 0

    one = solve_group_fused_lasso(Y[:1], 5.0)
    np.testing.assert_array_equal(one.Xhat, Y[:1])


def test_saturation_returns_row_mean(rng):
    Y = rng.normal(size=(30, 2))
    sol = solve_group_fused_lasso(Y, 1e3)
    assert sol.converged
    np.testing.assert_allclose(sol.Xhat, np.tile(Y.mean(axis=0), (30, 1)), atol=1e-9)
    assert sol.jump_set == ()


def test_non_convergence_is_flagged(rng):
    Y = rng.normal(size=(50, 2))
    sol = solve_group_fused_lasso(Y, 1.0, max_iter=1, method="bcd")
    assert not sol.converged
    assert sol.iterations == 1


def test_input_validation():
    with pytest.raises(InputError):
        solve_group_fused_lasso(np.zeros((0, 2)), 1.0)
    with pytest.raises(InputError):
        solve_group_fused_lasso(np.zeros((4, 2)), -1.0)
    with pytest.raises(InputError):
        solve_group_fused_lasso(np.zeros((4, 2)), 1.0, tol=0.0)
    with pytest.raises(InputError):
        solve_group_fused_lasso(np.zeros((4, 2)), 1.0, method="admm")


def test_kkt_residual_bounds_exact_minimum_from_above(rng):
    # [y, 0] has the same optimality conditions as y, so the scalar residual is the exact minimum
    for _ in range(20):
        y = rng.normal(size=15)
        x = solve_fused_lasso(y, 0.8).xhat.copy()
        idx = rng.choice(15, size=3, replace=False)
        x[idx] += rng.normal(scale=0.05, size=3)
        exact = kkt_residual(y, 0.8, x)
        Y = np.column_stack([y, np.zeros_like(y)])
        X = np.column_stack([x, np.zeros_like(x)])
        assert group_kkt_residual(Y, 0.8, X) >= exact - 1e-9
