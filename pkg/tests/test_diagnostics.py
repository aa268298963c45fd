# tests/test_diagnostics.py

import numpy as np
import pytest

from engine.diagnostics import (
    apriori_bounds,
    branches,
    constraint_residual,
    flux_integrals,
    flux_residuals,
    relative_strong_residual,
    strong_residual,
    summed_identity,
)
from engine.energy import action_gradient, reduced_state
from engine.report import CRITICAL, NOT_CRITICAL
from engine.state import SystemState
from engine.verify import verify_critical

from tests.conftest import smooth_mean_zero


@pytest.fixture
def random_state(problem3, rng):
    grid, background, cartan = problem3
    return SystemState(background, smooth_mean_zero(grid, 3, rng, 0.3), rng.uniform(-0.2, 0.2, 3))


def test_summed_identity_is_sum_of_fluxes(problem3, random_state):
    _, _, cartan = problem3
    lam = 7.0 * cartan.lambda0
    assert summed_identity(random_state, lam, cartan) == pytest.approx(
        float(np.sum(flux_residuals(random_state, lam, cartan))), rel=1e-10, abs=1e-9)
    np.testing.assert_allclose(flux_integrals(random_state, lam, cartan) + cartan.b,
                               flux_residuals(random_state, lam, cartan))


def test_strong_residual_is_minus_K_gradient(problem3, random_state):
    _, _, cartan = problem3
    lam = 7.0 * cartan.lambda0
    residual, _ = strong_residual(random_state, lam, cartan)
    G = action_gradient(random_state, lam, cartan).field
    np.testing.assert_allclose(residual, -np.einsum("ij,jxy->ixy", cartan.K, G), atol=1e-9 * np.max(np.abs(G)))


def test_random_state_not_critical(problem3, random_state):
    _, _, cartan = problem3
    report = verify_critical(random_state, 20 * cartan.lambda0, cartan)
    assert report.label == NOT_CRITICAL
    assert not report.is_critical
    assert report.relative_flux(cartan.b).shape == (3,)
    payload = report.to_dict()
    assert payload["label"] == NOT_CRITICAL and "state" not in payload


def test_constraint_diagnostics_at_c_plus(problem3, rng):
    grid, background, cartan = problem3
    lam = 20 * cartan.lambda0
    state, _ = reduced_state(smooth_mean_zero(grid, 3, rng, 0.2), lam, cartan, background)
    assert branches(state, lam, cartan).tolist() == [1, 1, 1]
    assert constraint_residual(state, lam, cartan) < 1e-11
    np.testing.assert_allclose(flux_residuals(state, lam, cartan), 0.0, atol=1e-8 * np.max(cartan.b))
    assert apriori_bounds(state, lam, cartan).bound == pytest.approx(grid.area * cartan.r_sum)


def test_critical_label_requires_small_strong_residual(problem3):
    _, background, cartan = problem3
    state = SystemState.zero(background)
    report = verify_critical(state, 20 * cartan.lambda0, cartan, tol=1e-6)
    assert report.label != CRITICAL
    assert relative_strong_residual(state, 20 * cartan.lambda0, cartan) > 1e-6
