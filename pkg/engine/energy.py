# engine/energy.py
#
# Action I(v) = 1/2 sum_i int d_i v^T A d_i v + lambda/2 int (U-1)^T M (U-1)
#             + (1/|Omega|) int b^T v,   U_j = exp(u0_j + v_j),
# its L2 gradient, the reduced functional J(w) = I(w + c_+(w)) and the
# Hessian block in the mean values.

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

import config
from engine.cartan import CartanData
from engine.constraint import ConstraintContext, ConstraintSolution, ContinuationOptions, continuation_solve
from engine.state import SystemState
from engine.torus import BackgroundSet, TorusGrid

logger = logging.getLogger("engine.energy")


@dataclass
class EnergyBreakdown:
    dirichlet: float
    potential: float
    linear: float

    @property
    def total(self) -> float:
        return self.dirichlet + self.potential + self.linear

    def to_dict(self) -> dict:
        return {**asdict(self), "total": self.total}


@dataclass
class GradientResult:
    """L2 representative of dI: field part (N, m1, m2) and the derivatives in c_j"""
    field: np.ndarray
    means: np.ndarray

    @property
    def mean_zero_part(self) -> np.ndarray:
        return self.field - np.mean(self.field, axis=(-2, -1), keepdims=True)


def _dirichlet_terms(state: SystemState, cartan: CartanData) -> tuple[float, np.ndarray]:
    """Dirichlet energy and -A Delta v"""
    grid = state.grid
    A_lap = np.einsum("ij,jxy->ixy", cartan.A, grid.laplacian_array(state.w))
    dirichlet = -0.5 * float(grid.integrate_array(np.sum(state.w * A_lap, axis=0)))
    return dirichlet, -A_lap


def action(state: SystemState, lam: float, cartan: CartanData) -> EnergyBreakdown:
    grid = state.grid
    U = state.exp_u()
    dirichlet, _ = _dirichlet_terms(state, cartan)
    excess = U - 1.0
    M_excess = np.einsum("ij,jxy->ixy", cartan.M, excess)
    potential = 0.5 * lam * float(grid.integrate_array(np.sum(excess * M_excess, axis=0)))
    linear = float(np.dot(cartan.b, grid.integrate_array(state.v))) / grid.area
    return EnergyBreakdown(dirichlet=dirichlet, potential=potential, linear=linear)


def action_gradient(state: SystemState, lam: float, cartan: CartanData) -> GradientResult:
    """G_j = -(A Delta v)_j + lambda U_j (M (U - 1))_j + b_j / |Omega|"""
    grid = state.grid
    U = state.exp_u()
    _, minus_A_lap = _dirichlet_terms(state, cartan)
    M_excess = np.einsum("ij,jxy->ixy", cartan.M, U - 1.0)
    G = minus_A_lap + lam * U * M_excess + (cartan.b / grid.area)[:, None, None]
    return GradientResult(field=G, means=np.asarray(grid.integrate_array(G)))


def reduced_state(w: np.ndarray, lam: float, cartan: CartanData, background: BackgroundSet,
                  opts: ContinuationOptions | None = None) -> tuple[SystemState, ConstraintSolution]:
    """State w + c_+(w) on the all-larger-root branch"""
    ctx = ConstraintContext.from_fields(background, w, lam, cartan)
    solution = continuation_solve(ctx, 1, opts)
    return SystemState(background, w, solution.c), solution


def reduced_action(w: np.ndarray, lam: float, cartan: CartanData, background: BackgroundSet,
                   opts: ContinuationOptions | None = None) -> float:
    state, _ = reduced_state(w, lam, cartan, background, opts)
    return action(state, lam, cartan).total


def c_hessian(state: SystemState, lam: float, cartan: CartanData) -> np.ndarray:
    """Second derivatives of c -> I(w + c); tri-diagonal because M is"""
    grid = state.grid
    U = state.exp_u()
    M_excess = np.einsum("ij,jxy->ixy", cartan.M, U - 1.0)
    cross = grid.integrate_array(U[:, None] * U[None, :])
    return lam * (np.diag(grid.integrate_array(U * M_excess)) + cartan.M * cross)


@dataclass
class DominanceCertificate:
    dominant: bool
    positive_definite: bool
    min_margin: float
    min_eigenvalue: float
    eigenvalues: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.dominant and self.positive_definite


def dominance_certificate(H: np.ndarray) -> DominanceCertificate:
    """Row dominance with positive diagonal, confirmed by a tri-diagonal eigenvalue solve"""
    diag = np.diag(H).copy()
    off = np.abs(H).sum(axis=1) - np.abs(diag)
    margins = diag - off
    if H.shape[0] == 1:
        eigenvalues = diag
    else:
        eigenvalues = scipy.linalg.eigh_tridiagonal(diag, np.diag(H, 1), eigvals_only=True)
    return DominanceCertificate(
        dominant=bool(np.all(diag > 0) and np.all(margins > 0)),
        positive_definite=bool(np.min(eigenvalues) > 0),
        min_margin=float(np.min(margins)),
        min_eigenvalue=float(np.min(eigenvalues)),
        eigenvalues=[float(x) for x in eigenvalues],
    )


class Metric:
    """Block operator P = -A Delta + S on (N, m1, m2) fields, inverted mode by mode"""

    def __init__(self, grid: TorusGrid, cartan: CartanData, lam: float,
                 shift: str = config.PRECONDITIONER_SHIFT):
        if shift == "vacuum":
            S = lam * cartan.M
        elif shift == "identity":
            S = np.eye(cartan.N)
        else:
            raise ValueError(f"Unknown preconditioner shift '{shift}'. Available: ['vacuum', 'identity']")
        self.grid = grid
        self.A = cartan.A
        self.S = S
        self.shift = shift
        blocks = grid.k_squared[..., None, None] * cartan.A + S
        self._inverse = np.linalg.inv(blocks)
        logger.debug(f"Metric built with {shift} shift on grid {grid.resolution}")

    def apply(self, f: np.ndarray) -> np.ndarray:
        lap = self.grid.laplacian_array(f)
        return -np.einsum("ij,jxy->ixy", self.A, lap) + np.einsum("ij,jxy->ixy", self.S, f)

    def apply_inverse(self, g: np.ndarray) -> np.ndarray:
        coeffs = self.grid.rfft(g)
        return self.grid.irfft(np.einsum("xyij,jxy->ixy", self._inverse, coeffs))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(self.grid.integrate_array(np.sum(f * self.apply(g), axis=0)))

    def norm(self, f: np.ndarray) -> float:
        return math.sqrt(max(self.inner(f, f), 0.0))

    def dual_norm(self, g: np.ndarray) -> float:
        """Norm of an L2 gradient measured through P^-1"""
        value = float(self.grid.integrate_array(np.sum(g * self.apply_inverse(g), axis=0)))
        return math.sqrt(max(value, 0.0))


def h1_distance(a: SystemState, b: SystemState) -> float:
    """Sum over components of the H1 norm of v_j - v'_j"""
    grid = a.grid
    d = a.v - b.v
    lap = grid.laplacian_array(d)
    per_component = grid.integrate_array(d * d - d * lap)
    return float(np.sum(np.sqrt(np.maximum(per_component, 0.0))))
