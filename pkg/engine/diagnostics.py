# engine/diagnostics.py

import logging
from dataclasses import asdict, dataclass

import numpy as np

from engine.cartan import CartanData
from engine.constraint import ConstraintContext, phi
from engine.errors import NegativeDiscriminant
from engine.state import SystemState

logger = logging.getLogger("engine.diagnostics")


def flux_residuals(state: SystemState, lam: float, cartan: CartanData) -> np.ndarray:
    """lambda int U_j (M (U - 1))_j + b_j; zero at critical points"""
    grid = state.grid
    U = state.exp_u()
    M_excess = np.einsum("ij,jxy->ixy", cartan.M, U - 1.0)
    return lam * np.asarray(grid.integrate_array(U * M_excess)) + cartan.b


def flux_integrals(state: SystemState, lam: float, cartan: CartanData) -> np.ndarray:
    """lambda int U_j (M (U - 1))_j alone; equals -b_j at critical points"""
    return flux_residuals(state, lam, cartan) - cartan.b


def summed_identity(state: SystemState, lam: float, cartan: CartanData) -> float:
    """lambda int (U-1)^T M (U-1) + lambda sum r_j int U_j - lambda |Omega| sum r_j + sum b_j"""
    grid = state.grid
    U = state.exp_u()
    excess = U - 1.0
    quad = float(grid.integrate_array(np.sum(excess * np.einsum("ij,jxy->ixy", cartan.M, excess), axis=0)))
    weighted = float(np.dot(cartan.r, grid.integrate_array(U)))
    return lam * quad + lam * weighted - lam * grid.area * cartan.r_sum + float(np.sum(cartan.b))


@dataclass
class BoundsReport:
    """Bounds implied by the summed identity at a critical point"""
    potential_integral: float
    exp_integrals: list[float]
    weighted_means: list[float]
    bound: float
    satisfied: bool

    def to_dict(self) -> dict:
        return asdict(self)


def apriori_bounds(state: SystemState, lam: float, cartan: CartanData, slack: float = 1e-6) -> BoundsReport:
    """int (U-1)^T M (U-1) <= |Omega| sum r, r_j int e^{u_j} <= |Omega| sum r, r_j e^{c_j} <= sum r"""
    grid = state.grid
    U = state.exp_u()
    excess = U - 1.0
    quad = float(grid.integrate_array(np.sum(excess * np.einsum("ij,jxy->ixy", cartan.M, excess), axis=0)))
    exp_integrals = np.asarray(grid.integrate_array(U), dtype=float)
    weighted = cartan.r * np.exp(state.c)
    bound = grid.area * cartan.r_sum
    tol = slack * max(1.0, bound)
    satisfied = (quad <= bound + tol and bool(np.all(cartan.r * exp_integrals <= bound + tol))
                 and bool(np.all(weighted <= cartan.r_sum + slack * cartan.r_sum)))
    return BoundsReport(
        potential_integral=quad,
        exp_integrals=exp_integrals.tolist(),
        weighted_means=weighted.tolist(),
        bound=bound,
        satisfied=bool(satisfied),
    )


def strong_residual(state: SystemState, lam: float, cartan: CartanData) -> tuple[np.ndarray, np.ndarray]:
    """Delta v - lambda K (U o M(U - 1)) - K b / |Omega|, plus the right side itself"""
    grid = state.grid
    U = state.exp_u()
    M_excess = np.einsum("ij,jxy->ixy", cartan.M, U - 1.0)
    rhs = lam * np.einsum("ij,jxy->ixy", cartan.K, U * M_excess) + (cartan.K @ cartan.b / grid.area)[:, None, None]
    return grid.laplacian_array(state.v) - rhs, rhs


def relative_strong_residual(state: SystemState, lam: float, cartan: CartanData) -> float:
    residual, rhs = strong_residual(state, lam, cartan)
    grid = state.grid
    num = float(np.sqrt(grid.integrate_array(np.sum(residual ** 2, axis=0))))
    den = float(np.sqrt(grid.integrate_array(np.sum(rhs ** 2, axis=0))))
    return num / max(1.0, den)


def rhs_integrals(state: SystemState, lam: float, cartan: CartanData) -> np.ndarray:
    """Integrals of the strong-form right side; zero per component at critical points"""
    _, rhs = strong_residual(state, lam, cartan)
    return np.asarray(state.grid.integrate_array(rhs))


def branches(state: SystemState, lam: float, cartan: CartanData) -> np.ndarray:
    """eps_j = 1 where t_j sits on the larger root of its own quadratic"""
    ctx = ConstraintContext.from_fields(state.background, state.w, lam, cartan)
    t = np.exp(state.c)
    Q = ctx.E1 + ctx.coupling(t)
    return (4.0 * cartan.r * ctx.E2 * t - Q >= 0.0).astype(np.int8)


def constraint_residual(state: SystemState, lam: float, cartan: CartanData) -> float:
    """max |phi(t, 1, eps)| with eps read off the state; inf off the solvable region"""
    ctx = ConstraintContext.from_fields(state.background, state.w, lam, cartan)
    t = np.exp(state.c)
    try:
        return float(np.max(np.abs(phi(ctx, t, 1.0, branches(state, lam, cartan)))))
    except NegativeDiscriminant as exc:
        logger.debug(f"Constraint residual undefined: {exc}")
        return float("inf")
