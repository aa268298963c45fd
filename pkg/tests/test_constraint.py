# tests/test_constraint.py

import numpy as np
import pytest

from engine.constraint import (
    ConstraintContext,
    admissibility_ratio,
    admissible,
    barrier_weights,
    continuation_solve,
    first_violation,
    phi,
    phi_jacobian,
    q_tilde,
    quadratic_residual,
    refine,
    sign_patterns,
    solve_all_patterns,
    solve_s0,
    uniqueness_spread,
)
from engine.errors import AdmissibilityBreach, ExpOverflow
from engine.tridiag import build_matrix, f_value

from tests.conftest import make_problem, smooth_mean_zero


def context(problem, multiple, w=None):
    grid, background, cartan = problem
    w = np.zeros_like(background.u0) if w is None else w
    return ConstraintContext.from_fields(background, w, multiple * cartan.lambda0, cartan)


def test_below_lambda0_is_inadmissible_everywhere(problem3):
    ctx = context(problem3, 0.5)
    assert not admissible(ctx)
    assert first_violation(ctx) == 0
    assert np.all(admissibility_ratio(ctx) > 1)
    with pytest.raises(AdmissibilityBreach) as info:
        continuation_solve(ctx)
    assert info.value.component == 0


def test_large_lambda_is_admissible(problem3):
    ctx = context(problem3, 20)
    assert admissible(ctx)
    assert first_violation(ctx) is None


def test_q_tilde_and_s0_root(problem3):
    ctx = context(problem3, 20)
    t = np.ones(3)
    assert q_tilde(ctx, t, 0.0, 1) == pytest.approx(ctx.E1[1])
    assert q_tilde(ctx, t, 1.0, 1) == pytest.approx(ctx.E1[1] + ctx.coupling(t)[1])
    with pytest.raises(ValueError):
        q_tilde(ctx, np.array([1.0, -1.0, 1.0]), 0.5, 0)
    for eps in (0, 1):
        t0 = solve_s0(ctx, eps)
        np.testing.assert_allclose(quadratic_residual(ctx, t0, 0.0), 0.0, atol=1e-12)


@pytest.mark.parametrize("eps", [1, 0, [1, 0, 1], [0, 1, 0]])
def test_continuation_reaches_s1(problem3, rng, eps):
    grid, background, cartan = problem3
    ctx = context(problem3, 20, smooth_mean_zero(grid, 3, rng, 0.2))
    solution = continuation_solve(ctx, eps)
    assert solution.s == 1.0
    assert np.max(np.abs(phi(ctx, solution.t, 1.0, eps))) <= 1e-12 * (1 + np.max(solution.t))
    assert solution.jacobian_det > 0
    assert all(det > 0 for _, det in solution.det_trace)
    assert solution.certified and solution.within_envelope
    scale = np.abs(2 * cartan.r * ctx.E2 * solution.t ** 2) + cartan.b / (ctx.lam * cartan.r)
    assert np.all(np.abs(quadratic_residual(ctx, solution.t, 1.0)) <= 1e-10 * scale)


def test_jacobian_matches_finite_differences(problem3, rng):
    grid, _, _ = problem3
    ctx = context(problem3, 20, smooth_mean_zero(grid, 3, rng, 0.2))
    for eps in ([1, 1, 1], [0, 1, 0]):
        t = continuation_solve(ctx, eps).t * 1.01
        J = build_matrix(phi_jacobian(ctx, t, 0.7, eps))
        h = 1e-6
        numeric = np.empty((3, 3))
        for k in range(3):
            step = np.zeros(3)
            step[k] = h * t[k]
            numeric[:, k] = (phi(ctx, t + step, 0.7, eps) - phi(ctx, t - step, 0.7, eps)) / (2 * step[k])
        np.testing.assert_allclose(J, numeric, rtol=1e-6, atol=1e-9)


def test_jacobian_is_identity_at_s0(problem3):
    ctx = context(problem3, 20)
    np.testing.assert_array_equal(build_matrix(phi_jacobian(ctx, np.ones(3), 0.0, 1)), np.eye(3))


def test_barrier_weights_endpoints(problem3):
    ctx = context(problem3, 20)
    tau = barrier_weights(ctx, np.ones(3)).tau
    assert tau[0] == 0.0 and tau[-1] == 1.0 and 0.0 < tau[1] < 1.0


def test_smaller_roots_sit_below_larger_roots(problem3):
    ctx = context(problem3, 20)
    solutions = solve_all_patterns(ctx, workers=2)
    assert len(solutions) == 8
    upper = next(s for s in solutions if np.all(s.epsilon == 1))
    for solution in solutions:
        assert solution.jacobian_det > 0
        low = solution.epsilon == 0
        assert np.all(solution.t[low] < upper.t[low])
        assert f_value(phi_jacobian(ctx, solution.t, 1.0, solution.epsilon)) == pytest.approx(solution.jacobian_det)


def test_small_root_large_lambda_limit():
    grid, background, cartan = make_problem(1, 32)
    ctx = ConstraintContext.from_fields(background, np.zeros_like(background.u0), 1e4 * cartan.lambda0, cartan)
    t = continuation_solve(ctx, 0).t
    limit = cartan.b / (ctx.lam * cartan.r * ctx.E1)
    np.testing.assert_allclose(t, limit, rtol=1e-3)


def test_uniqueness_and_refine(problem3, rng):
    ctx = context(problem3, 20)
    solution = continuation_solve(ctx)
    assert uniqueness_spread(ctx, solution, rng, starts=3) <= 1e-10
    np.testing.assert_allclose(refine(ctx, solution.t * 1.001), solution.t, rtol=1e-12)
    with pytest.raises(ValueError):
        refine(ctx, -solution.t)


def test_sign_patterns():
    patterns = sign_patterns(3)
    assert len({tuple(p) for p in patterns}) == 8
    assert tuple(patterns[0]) == (1, 1, 1)


def test_context_validation(problem3):
    _, background, cartan = problem3
    with pytest.raises(ValueError):
        ConstraintContext(cartan, 1.0, np.full(3, 2.0), np.ones(3), np.array([1.0, 1.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        ConstraintContext(cartan, -1.0, np.ones(3), np.ones(3), np.array([1.0, 1.0, 0.0]), 1.0)
    w = np.zeros_like(background.u0)
    w[0, 0, 0], w[0, 0, 1] = 150.0, -150.0
    with pytest.raises(ExpOverflow):
        ConstraintContext.from_fields(background, w, cartan.lambda0, cartan)


@pytest.mark.slow
def test_sign_sweep_ranks_three_to_five(rng):
    for N in (3, 4, 5):
        grid, background, cartan = make_problem(N, 128)
        for _ in range(5):
            w = smooth_mean_zero(grid, N, rng, 0.2)
            ctx = ConstraintContext.from_fields(background, w, 20 * cartan.lambda0, cartan)
            assert all(s.jacobian_det > 0 for s in solve_all_patterns(ctx))
