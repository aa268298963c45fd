# tests/conftest.py

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from engine.cartan import CartanData  # noqa: E402
from engine.torus import TorusGrid, VortexSet, build_backgrounds  # noqa: E402

VORTEX = (0.3, 0.4)


def make_problem(N: int = 3, resolution: int = 32, counts=None, mode: str = "gaussian"):
    """Grid, backgrounds and Cartan data with one vortex in the first component by default"""
    counts = counts or (1,) + (0,) * (N - 1)
    grid = TorusGrid.square(resolution)
    components = [[(VORTEX, n)] if n else [] for n in counts]
    vortices = VortexSet.from_relative(grid.periods, components)
    background = build_backgrounds(grid, vortices, mode)
    cartan = CartanData.build(N, vortices.counts, grid.area)
    return grid, background, cartan


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def problem3():
    return make_problem(3, 32)


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid.square(32)


def smooth_mean_zero(grid: TorusGrid, N: int, rng: np.random.Generator, amplitude: float = 0.2,
                     modes: int = 2) -> np.ndarray:
    x, y = grid.coordinates
    w = np.zeros((N,) + grid.shape)
    for j in range(N):
        for k1 in range(-modes, modes + 1):
            for k2 in range(0, modes + 1):
                if k2 == 0 and k1 <= 0:
                    continue
                phase = 2.0 * np.pi * (k1 * x + k2 * y)
                a, b = rng.normal(size=2)
                w[j] += a * np.cos(phase) + b * np.sin(phase)
    w -= np.mean(w, axis=(-2, -1), keepdims=True)
    return amplitude * w / np.max(np.abs(w))
