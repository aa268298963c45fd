# engine/torus.py

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.fft

import config

logger = logging.getLogger("engine.torus")


def _is_power_of_two(m: int) -> bool:
    return m > 0 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [0, L1) x [0, L2); axis 0 runs along x"""
    periods: tuple[float, float] = config.DEFAULT_PERIODS
    resolution: tuple[int, int] = (config.DEFAULT_RESOLUTION, config.DEFAULT_RESOLUTION)

    def __post_init__(self):
        periods = tuple(float(p) for p in self.periods)
        resolution = tuple(int(m) for m in self.resolution)
        if len(periods) != 2 or len(resolution) != 2:
            raise ValueError("Periods and resolution need exactly two entries")
        if min(periods) <= 0 or not all(math.isfinite(p) for p in periods):
            raise ValueError(f"Periods must be positive, got {periods}")
        for m in resolution:
            if m < config.MIN_RESOLUTION or not _is_power_of_two(m):
                raise ValueError(f"Resolution must be a power of two >= {config.MIN_RESOLUTION}, got {m}")
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "resolution", resolution)

    @classmethod
    def square(cls, m: int, periods: Sequence[float] = config.DEFAULT_PERIODS) -> "TorusGrid":
        return cls(periods=tuple(periods), resolution=(m, m))

    @property
    def shape(self) -> tuple[int, int]:
        return self.resolution

    @property
    def area(self) -> float:
        return self.periods[0] * self.periods[1]

    @property
    def spacing(self) -> tuple[float, float]:
        return self.periods[0] / self.resolution[0], self.periods[1] / self.resolution[1]

    @property
    def cell_area(self) -> float:
        return self.area / (self.resolution[0] * self.resolution[1])

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.resolution[0]) * self.spacing[0]
        y = np.arange(self.resolution[1]) * self.spacing[1]
        return np.meshgrid(x, y, indexing="ij")

    @cached_property
    def k_squared(self) -> np.ndarray:
        """|k|^2 on the real-FFT half plane, shape (m1, m2 // 2 + 1)"""
        m1, m2 = self.resolution
        kx = 2.0 * np.pi * scipy.fft.fftfreq(m1, d=self.spacing[0])
        ky = 2.0 * np.pi * scipy.fft.rfftfreq(m2, d=self.spacing[1])
        return kx[:, None] ** 2 + ky[None, :] ** 2

    @cached_property
    def inverse_k_squared(self) -> np.ndarray:
        """-1/|k|^2 with the zero mode mapped to 0"""
        k2 = self.k_squared
        out = np.zeros_like(k2)
        out[k2 > 0] = -1.0 / k2[k2 > 0]
        return out

    def rfft(self, values: np.ndarray) -> np.ndarray:
        return scipy.fft.rfft2(values, axes=(-2, -1), workers=config.FFT_WORKERS)

    def irfft(self, coefficients: np.ndarray) -> np.ndarray:
        return scipy.fft.irfft2(coefficients, s=self.resolution, axes=(-2, -1), workers=config.FFT_WORKERS)

    def integrate_array(self, values: np.ndarray) -> np.ndarray | float:
        """Rectangle rule over the last two axes"""
        return np.sum(values, axis=(-2, -1)) * self.cell_area

    def mean_array(self, values: np.ndarray) -> np.ndarray | float:
        return np.mean(values, axis=(-2, -1))

    def laplacian_array(self, values: np.ndarray) -> np.ndarray:
        return self.irfft(-self.k_squared * self.rfft(values))

    def poisson_array(self, values: np.ndarray) -> np.ndarray:
        """Mean-zero u with spectral Laplacian equal to the mean-zero part of values"""
        return self.irfft(self.inverse_k_squared * self.rfft(values))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Samples of a real field at the nodes (i L1/m1, j L2/m2)"""
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"Field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Field values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: TorusGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.values - other.values)

    def scaled(self, factor: float) -> "ScalarField":
        return ScalarField(self.grid, factor * self.values)


def integrate(f: ScalarField) -> float:
    return float(f.grid.integrate_array(f.values))


def mean_zero_project(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, f.values - np.mean(f.values))


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, f.grid.laplacian_array(f.values))


def laplacian_inverse_meanzero(g: ScalarField) -> ScalarField:
    """Spectral solve of Delta u = g for mean-zero g; the result has zero mean"""
    scale = float(np.max(np.abs(g.values))) if g.values.size else 0.0
    total = integrate(g)
    if abs(total) > 1e-8 * g.grid.area * scale:
        raise ValueError(f"Poisson data must have zero mean, integral is {total:.3e}")
    return ScalarField(g.grid, g.grid.poisson_array(g.values))


def dirichlet_pairing(f: ScalarField, g: ScalarField) -> float:
    """Integral of grad f . grad g"""
    return -float(f.grid.integrate_array(f.values * f.grid.laplacian_array(g.values)))


def h1_inner(f: ScalarField, g: ScalarField) -> float:
    return float(f.grid.integrate_array(f.values * g.values)) + dirichlet_pairing(f, g)


def h1_norm(f: ScalarField) -> float:
    return math.sqrt(max(h1_inner(f, f), 0.0))


@dataclass(frozen=True)
class VortexPoint:
    x: float
    y: float
    multiplicity: int = 1


@dataclass(frozen=True)
class VortexSet:
    """Vortex points per component, reduced into the fundamental cell"""
    periods: tuple[float, float]
    components: tuple[tuple[VortexPoint, ...], ...]

    def __post_init__(self):
        reduced = []
        for points in self.components:
            entries = []
            for p in points:
                if int(p.multiplicity) != p.multiplicity or p.multiplicity < 0:
                    raise ValueError(f"Multiplicity must be a non-negative integer, got {p.multiplicity}")
                entries.append(VortexPoint(p.x % self.periods[0], p.y % self.periods[1], int(p.multiplicity)))
            reduced.append(tuple(entries))
        object.__setattr__(self, "components", tuple(reduced))
        if sum(self.counts) < 1:
            raise ValueError("At least one vortex is required across all components")

    @classmethod
    def from_relative(cls, periods: Sequence[float],
                      components: Iterable[Iterable[tuple[Sequence[float], int]]]) -> "VortexSet":
        """Build from period-relative coordinates in [0, 1)^2"""
        L1, L2 = (float(p) for p in periods)
        built = tuple(
            tuple(VortexPoint(point[0] * L1, point[1] * L2, int(mult)) for point, mult in entries)
            for entries in components
        )
        return cls(periods=(L1, L2), components=built)

    @property
    def N(self) -> int:
        return len(self.components)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(sum(p.multiplicity for p in points) for points in self.components)


def periodic_offsets(grid: TorusGrid, point: VortexPoint) -> tuple[np.ndarray, np.ndarray]:
    """Minimal-image displacement from point to every node"""
    X, Y = grid.coordinates
    L1, L2 = grid.periods
    dx = (X - point.x + 0.5 * L1) % L1 - 0.5 * L1
    dy = (Y - point.y + 0.5 * L2) % L2 - 0.5 * L2
    return dx, dy


def gaussian_width(grid: TorusGrid) -> float:
    return config.SIGMA_GRID_FACTOR * max(grid.spacing)


def regularized_delta(grid: TorusGrid, point: VortexPoint, sigma: float | None = None) -> np.ndarray:
    """Periodic Gaussian exp(-|x-p|^2/sigma^2) over the 3x3 neighbouring cells, unit discrete mass"""
    sigma = gaussian_width(grid) if sigma is None else sigma
    dx, dy = periodic_offsets(grid, point)
    L1, L2 = grid.periods
    kernel = np.zeros(grid.shape)
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            kernel += np.exp(-((dx + a * L1) ** 2 + (dy + b * L2) ** 2) / sigma ** 2)
    return kernel / (np.sum(kernel) * grid.cell_area)


def _min_separation(grid: TorusGrid, points: Sequence[VortexPoint]) -> float:
    best = math.inf
    for i, p in enumerate(points):
        for q in points[i + 1:]:
            L1, L2 = grid.periods
            dx = (q.x - p.x + 0.5 * L1) % L1 - 0.5 * L1
            dy = (q.y - p.y + 0.5 * L2) % L2 - 0.5 * L2
            best = min(best, math.hypot(dx, dy))
    return best


def _smooth_step(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C-infinity step S(x) rising from 0 at x <= 0 to 1 at x >= 1, with S' and S''"""
    inside = (x > 0.0) & (x < 1.0)
    xs = np.where(inside, x, 0.5)
    ys = 1.0 - xs
    p = np.exp(-1.0 / xs)
    q = np.exp(-1.0 / ys)
    p1 = p / xs ** 2
    q1 = -q / ys ** 2
    p2 = p * (1.0 / xs ** 4 - 2.0 / xs ** 3)
    q2 = q * (1.0 / ys ** 4 - 2.0 / ys ** 3)
    total = p + q
    num1 = p1 * q - p * q1
    S = p / total
    S1 = num1 / total ** 2
    S2 = (p2 * q - p * q2) / total ** 2 - 2.0 * num1 * (p1 + q1) / total ** 3
    S = np.where(inside, S, np.where(x >= 1.0, 1.0, 0.0))
    S1 = np.where(inside, S1, 0.0)
    S2 = np.where(inside, S2, 0.0)
    return S, S1, S2


def cutoff(r: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """chi(r) = 1 for r <= radius/2 and 0 for r >= radius, with chi' and chi''"""
    half = 0.5 * radius
    S, S1, S2 = _smooth_step((r - half) / half)
    return 1.0 - S, -S1 / half, -S2 / half ** 2


@dataclass(frozen=True, eq=False)
class Background:
    u0: ScalarField
    exp_u0: ScalarField


@dataclass(frozen=True, eq=False)
class BackgroundSet:
    """Stacked background functions of all components, arrays of shape (N, m1, m2)"""
    grid: TorusGrid
    u0: np.ndarray
    exp_u0: np.ndarray
    counts: tuple[int, ...]
    mode: str = config.DEFAULT_BACKGROUND_MODE

    @property
    def N(self) -> int:
        return self.u0.shape[0]

    def component(self, j: int) -> Background:
        return Background(ScalarField(self.grid, self.u0[j]), ScalarField(self.grid, self.exp_u0[j]))


def _gaussian_background(grid: TorusGrid, points: Sequence[VortexPoint], n: int) -> tuple[np.ndarray, np.ndarray]:
    source = np.zeros(grid.shape)
    for p in points:
        if p.multiplicity:
            source += p.multiplicity * regularized_delta(grid, p)
    rhs = 4.0 * np.pi * (source - n / grid.area)
    u0 = laplacian_inverse_meanzero(ScalarField(grid, rhs)).values
    return u0, np.exp(u0)


def _exact_background(grid: TorusGrid, points: Sequence[VortexPoint], n: int) -> tuple[np.ndarray, np.ndarray]:
    radius = config.CUTOFF_RADIUS_FRACTION * min(grid.periods)
    floor = config.LOG_RADIUS_FLOOR_FRACTION * min(grid.spacing)
    singular = np.zeros(grid.shape)
    smooth_source = np.zeros(grid.shape)
    log_factors = []
    for p in points:
        if not p.multiplicity:
            continue
        dx, dy = periodic_offsets(grid, p)
        r = np.hypot(dx, dy)
        chi, chi1, chi2 = cutoff(r, radius)
        log_r = np.log(np.maximum(r, floor))
        r_safe = np.maximum(r, floor)
        singular += p.multiplicity * 2.0 * chi * log_r
        # Delta(2 chi ln r) = 4 pi delta + 2 (chi'' + chi'/r) ln r + 4 chi'/r
        smooth_source += p.multiplicity * (2.0 * (chi2 + chi1 / r_safe) * log_r + 4.0 * chi1 / r_safe)
        log_factors.append((r, 2 * p.multiplicity * chi))
    rhs = -smooth_source - 4.0 * np.pi * n / grid.area
    rhs -= np.mean(rhs)
    remainder = grid.poisson_array(rhs)
    shift = float(np.mean(singular + remainder))
    u0 = singular + remainder - shift
    exp_u0 = np.exp(remainder - shift)
    for r, power in log_factors:
        exp_u0 *= r ** power
    return u0, exp_u0


def background_function(grid: TorusGrid, vortices: VortexSet, j: int,
                        mode: str = config.DEFAULT_BACKGROUND_MODE) -> Background:
    """Mean-zero u0 with Delta u0 = 4 pi sum delta_p - 4 pi n_j / area, and exp(u0)"""
    if not 0 <= j < vortices.N:
        raise ValueError(f"Component index {j} out of range for N={vortices.N}")
    points = [p for p in vortices.components[j] if p.multiplicity > 0]
    n = vortices.counts[j]
    if n == 0:
        return Background(ScalarField.constant(grid, 0.0), ScalarField.constant(grid, 1.0))

    separation = _min_separation(grid, points)
    if separation < config.MIN_VORTEX_SEPARATION_CELLS * max(grid.spacing):
        logger.warning(f"Component {j}: vortex points {separation:.3g} apart are under-resolved "
                       f"by grid {grid.resolution}")

    if mode == "gaussian":
        u0, exp_u0 = _gaussian_background(grid, points, n)
    elif mode == "exact":
        u0, exp_u0 = _exact_background(grid, points, n)
    else:
        raise ValueError(f"Unknown background mode '{mode}'. Available modes: ['gaussian', 'exact']")
    return Background(ScalarField(grid, u0), ScalarField(grid, exp_u0))


def build_backgrounds(grid: TorusGrid, vortices: VortexSet,
                      mode: str = config.DEFAULT_BACKGROUND_MODE) -> BackgroundSet:
    parts = [background_function(grid, vortices, j, mode) for j in range(vortices.N)]
    logger.info(f"Built {mode} backgrounds on grid {grid.resolution} for counts {vortices.counts}")
    return BackgroundSet(
        grid=grid,
        u0=np.stack([b.u0.values for b in parts]),
        exp_u0=np.stack([b.exp_u0.values for b in parts]),
        counts=vortices.counts,
        mode=mode,
    )
