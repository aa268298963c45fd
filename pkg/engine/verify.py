# engine/verify.py

import logging
import time

import numpy as np

import config
from engine.cartan import CartanData
from engine.diagnostics import (
    apriori_bounds,
    branches,
    constraint_residual,
    flux_residuals,
    relative_strong_residual,
    rhs_integrals,
    summed_identity,
)
from engine.energy import Metric, action, action_gradient
from engine.report import CRITICAL, NOT_CRITICAL, SolveReport
from engine.state import SystemState

logger = logging.getLogger("engine.verify")


def verify_critical(state: SystemState, lam: float, cartan: CartanData,
                    tol: float = config.VERIFY_TOLERANCE, metric: Metric | None = None,
                    shift: str = config.PRECONDITIONER_SHIFT) -> SolveReport:
    """Residuals of the strong form, the flux identities and the energy; labels the state"""
    started = time.perf_counter()
    metric = metric or Metric(state.grid, cartan, lam, shift)
    energy = action(state, lam, cartan)
    gradient = action_gradient(state, lam, cartan)
    gradient_norm = metric.dual_norm(gradient.field)
    flux = flux_residuals(state, lam, cartan)
    strong = relative_strong_residual(state, lam, cartan)
    relative_flux = float(np.max(np.abs(flux) / cartan.b))

    critical = gradient_norm < tol and relative_flux < tol and strong < tol
    report = SolveReport(
        state=state,
        energy=energy,
        gradient_norm=gradient_norm,
        flux_residuals=flux,
        constraint_residual=constraint_residual(state, lam, cartan),
        strong_residual=strong,
        label=CRITICAL if critical else NOT_CRITICAL,
        rhs_integrals=rhs_integrals(state, lam, cartan),
        summed_identity=summed_identity(state, lam, cartan),
        branches=branches(state, lam, cartan).tolist(),
        bounds=apriori_bounds(state, lam, cartan),
    )
    report.wall_time = time.perf_counter() - started
    logger.info(f"Verification: label={report.label}, energy={energy.total:.10g}, "
                f"gradient={gradient_norm:.3e}, flux={relative_flux:.3e}, strong={strong:.3e}")
    return report
