# tests/test_torus.py

import math

import numpy as np
import pytest

from engine.torus import (
    ScalarField,
    TorusGrid,
    VortexPoint,
    VortexSet,
    background_function,
    build_backgrounds,
    h1_inner,
    h1_norm,
    integrate,
    laplacian,
    laplacian_inverse_meanzero,
    mean_zero_project,
    periodic_offsets,
    regularized_delta,
)


@pytest.mark.parametrize("resolution", [(24, 32), (8, 8), (32, 0)])
def test_grid_rejects_bad_resolution(resolution):
    with pytest.raises(ValueError):
        TorusGrid(periods=(1.0, 1.0), resolution=resolution)


def test_grid_geometry():
    grid = TorusGrid(periods=(2.0, 1.0), resolution=(64, 32))
    assert grid.area == 2.0
    assert grid.spacing == (2.0 / 64, 1.0 / 32)
    assert grid.cell_area == pytest.approx(2.0 / (64 * 32))
    x, y = grid.coordinates
    assert x.shape == grid.shape and x[1, 0] == pytest.approx(2.0 / 64) and y[0, 1] == pytest.approx(1.0 / 32)


def test_integrate_and_project(grid32):
    x, y = grid32.coordinates
    f = ScalarField(grid32, 3.0 + np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y))
    assert integrate(f) == pytest.approx(3.0, abs=1e-12)
    assert integrate(mean_zero_project(f)) == pytest.approx(0.0, abs=1e-12)


def test_spectral_laplacian_of_mode(grid32):
    x, y = grid32.coordinates
    f = ScalarField(grid32, np.sin(2 * np.pi * x) + np.cos(2 * np.pi * 3 * y))
    expected = -4 * np.pi ** 2 * np.sin(2 * np.pi * x) - 36 * np.pi ** 2 * np.cos(6 * np.pi * y)
    np.testing.assert_allclose(laplacian(f).values, expected, atol=1e-9)


def test_poisson_solve_inverts_laplacian(grid32, rng):
    x, y = grid32.coordinates
    u = np.exp(np.sin(2 * np.pi * x)) * np.cos(2 * np.pi * y)
    u -= u.mean()
    g = laplacian(ScalarField(grid32, u))
    np.testing.assert_allclose(laplacian_inverse_meanzero(g).values, u, atol=1e-10)


def test_poisson_requires_mean_zero(grid32):
    with pytest.raises(ValueError):
        laplacian_inverse_meanzero(ScalarField.constant(grid32, 1.0))


def test_h1_inner_of_mode(grid32):
    x, _ = grid32.coordinates
    f = ScalarField(grid32, np.sin(2 * np.pi * x))
    assert h1_inner(f, f) == pytest.approx(0.5 + 2 * np.pi ** 2, rel=1e-12)
    assert h1_norm(f) == pytest.approx(math.sqrt(0.5 + 2 * np.pi ** 2), rel=1e-12)


def test_regularized_delta_has_unit_mass(grid32):
    kernel = regularized_delta(grid32, VortexPoint(0.98, 0.01))
    assert np.sum(kernel) * grid32.cell_area == pytest.approx(1.0, rel=1e-14)
    assert kernel.min() >= 0


def test_vortex_set_reduces_and_validates():
    vortices = VortexSet(periods=(1.0, 1.0), components=((VortexPoint(1.25, -0.5, 2),), ()))
    point = vortices.components[0][0]
    assert (point.x, point.y) == pytest.approx((0.25, 0.5))
    assert vortices.counts == (2, 0) and vortices.N == 2
    with pytest.raises(ValueError):
        VortexSet(periods=(1.0, 1.0), components=((), ()))


def test_gaussian_background_solves_poisson(grid32):
    vortices = VortexSet.from_relative(grid32.periods, [[((0.3, 0.4), 1), ((0.7, 0.6), 1)], []])
    background = background_function(grid32, vortices, 0, "gaussian")
    u0 = background.u0.values
    assert np.mean(u0) == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(background.exp_u0.values, np.exp(u0))
    source = sum(regularized_delta(grid32, p) for p in vortices.components[0])
    rhs = 4 * np.pi * (source - 2 / grid32.area)
    np.testing.assert_allclose(grid32.laplacian_array(u0), rhs, atol=1e-8 * np.max(np.abs(rhs)))


def test_empty_component_background(grid32):
    vortices = VortexSet.from_relative(grid32.periods, [[((0.3, 0.4), 1)], []])
    background = background_function(grid32, vortices, 1)
    assert np.all(background.u0.values == 0.0) and np.all(background.exp_u0.values == 1.0)
    with pytest.raises(ValueError):
        background_function(grid32, vortices, 2)
    with pytest.raises(ValueError):
        background_function(grid32, vortices, 0, "spline")


def test_exact_background_vanishes_at_vortex(grid32):
    vortices = VortexSet.from_relative(grid32.periods, [[((0.25, 0.5), 1)]])
    background = background_function(grid32, vortices, 0, "exact")
    assert background.exp_u0.values[8, 16] == 0.0
    assert np.mean(background.u0.values) == pytest.approx(0.0, abs=1e-10)
    assert np.all(background.exp_u0.values >= 0)


def test_close_vortices_warn(grid32, caplog):
    vortices = VortexSet.from_relative(grid32.periods, [[((0.3, 0.4), 1), ((0.32, 0.4), 1)]])
    background_function(grid32, vortices, 0)
    assert "under-resolved" in caplog.text


def test_build_backgrounds_stacks_components(grid32):
    vortices = VortexSet.from_relative(grid32.periods, [[((0.3, 0.4), 1)], [], [((0.6, 0.1), 2)]])
    background = build_backgrounds(grid32, vortices)
    assert background.u0.shape == (3, 32, 32) and background.N == 3
    assert background.counts == (1, 0, 2)
    np.testing.assert_allclose(background.component(2).u0.values, background.u0[2])


@pytest.mark.parametrize("resolution, tolerance", [
    (64, 1e-2),
    pytest.param(128, 5e-3, marks=pytest.mark.slow),
])
def test_exact_and_gaussian_modes_agree(resolution, tolerance):
    grid = TorusGrid.square(resolution)
    vortices = VortexSet.from_relative(grid.periods, [[((0.3, 0.4), 1)]])
    exact = background_function(grid, vortices, 0, "exact")
    smooth = background_function(grid, vortices, 0, "gaussian")
    assert integrate(smooth.exp_u0) == pytest.approx(integrate(exact.exp_u0), rel=tolerance)


def test_gaussian_background_self_converges_far_from_vortex():
    # sigma tracks the grid spacing, so doubling the grid halves it
    far_values = []
    for resolution in (64, 128, 256):
        grid = TorusGrid.square(resolution)
        vortices = VortexSet.from_relative(grid.periods, [[((0.5, 0.5), 1)]])
        background = background_function(grid, vortices, 0, "gaussian")
        stride = resolution // 64
        far_values.append(background.exp_u0.values[::stride, ::stride])
    grid = TorusGrid.square(64)
    dx, dy = periodic_offsets(grid, VortexPoint(0.5, 0.5, 1))
    far = np.hypot(dx, dy) >= 0.25 * grid.periods[0]

    def change(coarse, fine):
        return float(np.max(np.abs(fine[far] - coarse[far]) / coarse[far]))

    first, second = change(far_values[0], far_values[1]), change(far_values[1], far_values[2])
    assert second < 1e-3
    assert second < 0.5 * first
