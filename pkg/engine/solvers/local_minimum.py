# engine/solvers/local_minimum.py

import logging
import time
from dataclasses import dataclass, field

import numpy as np

import config
from engine.cartan import CartanData
from engine.constraint import (
    ConstraintContext,
    ContinuationOptions,
    admissibility_ratio,
    continuation_solve,
    first_violation,
)
from engine.energy import EnergyBreakdown, Metric, action, action_gradient, c_hessian, dominance_certificate
from engine.errors import AdmissibilityBreach, NonConvergence, SolverError
from engine.report import SolveReport
from engine.solvers.base import BaseSolver, Problem
from engine.state import SystemState
from engine.torus import BackgroundSet
from engine.verify import verify_critical

logger = logging.getLogger("engine.solvers.local_minimum")


@dataclass
class MinimizeOptions:
    max_iters: int = config.MIN_MAX_ITERS
    gradient_tolerance: float = config.GRADIENT_TOLERANCE
    armijo_c: float = config.ARMIJO_C
    backtrack_ratio: float = config.BACKTRACK_RATIO
    max_backtracks: int = config.MAX_BACKTRACKS
    admissibility_margin: float = config.ADMISSIBILITY_MARGIN
    initial_step_norm: float = config.INITIAL_STEP_NORM
    step_bounds: tuple[float, float] = config.BB_STEP_BOUNDS
    verify_tolerance: float = config.VERIFY_TOLERANCE
    log_every: int = 50
    continuation: ContinuationOptions = field(default_factory=ContinuationOptions)

    def __post_init__(self):
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("Iteration and backtracking caps must be positive")
        if not 0 < self.armijo_c < 1:
            raise ValueError(f"Armijo constant must lie in (0, 1), got {self.armijo_c}")
        if not 0 < self.backtrack_ratio < 1:
            raise ValueError(f"Backtracking ratio must lie in (0, 1), got {self.backtrack_ratio}")
        if not 0 < self.admissibility_margin <= 1:
            raise ValueError(f"Admissibility margin must lie in (0, 1], got {self.admissibility_margin}")
        if self.gradient_tolerance <= 0 or self.initial_step_norm <= 0:
            raise ValueError("Tolerances and step norms must be positive")
        low, high = self.step_bounds
        if not 0 < low < high:
            raise ValueError(f"Step bounds must satisfy 0 < low < high, got {self.step_bounds}")


@dataclass
class ReducedPoint:
    """Reduced functional at one w: the state on c_+(w), its energy and mean-zero gradient"""
    w: np.ndarray
    state: SystemState
    energy: EnergyBreakdown
    gradient: np.ndarray
    ratio: float

    @property
    def value(self) -> float:
        return self.energy.total


def evaluate_reduced(w: np.ndarray, lam: float, cartan: CartanData, background: BackgroundSet,
                     margin: float = 1.0, opts: ContinuationOptions | None = None) -> ReducedPoint:
    """J(w) and its gradient; raises AdmissibilityBreach when the ratio exceeds the margin"""
    ctx = ConstraintContext.from_fields(background, w, lam, cartan)
    ratios = admissibility_ratio(ctx)
    j = first_violation(ctx, margin)
    if j is not None:
        raise AdmissibilityBreach(j, float(ratios[j]))
    solution = continuation_solve(ctx, 1, opts)
    state = SystemState(background, w, solution.c)
    gradient = action_gradient(state, lam, cartan).mean_zero_part
    return ReducedPoint(
        w=state.w, state=state, energy=action(state, lam, cartan),
        gradient=gradient, ratio=float(np.max(ratios)),
    )


def _warn_outside_regime(cartan: CartanData, lam: float) -> None:
    if cartan.N not in config.RECOMMENDED_RANKS:
        logger.warning(f"Rank N={cartan.N} lies outside the tested range {config.RECOMMENDED_RANKS}")
    if lam < config.LAMBDA_WARNING_MULTIPLE * cartan.lambda0:
        logger.warning(f"lambda={lam:.6g} is below {config.LAMBDA_WARNING_MULTIPLE:g} lambda0 "
                       f"({cartan.lambda0:.6g}); admissibility margins may be thin")


def minimize_reduced(w0: np.ndarray, lam: float, cartan: CartanData, background: BackgroundSet,
                     opts: MinimizeOptions | None = None, metric: Metric | None = None) -> SolveReport:
    """Preconditioned Barzilai-Borwein descent of J(w) = I(w + c_+(w)) with Armijo backtracking"""
    opts = opts or MinimizeOptions()
    _warn_outside_regime(cartan, lam)
    metric = metric or Metric(background.grid, cartan, lam)
    started = time.perf_counter()

    w0 = np.asarray(w0, dtype=float)
    w0 = w0 - np.mean(w0, axis=(-2, -1), keepdims=True)
    current = evaluate_reduced(w0, lam, cartan, background, 1.0, opts.continuation)
    trace: list[dict] = []
    alpha = None
    low, high = opts.step_bounds

    for iteration in range(opts.max_iters + 1):
        direction = metric.apply_inverse(current.gradient)
        direction -= np.mean(direction, axis=(-2, -1), keepdims=True)
        slope = float(background.grid.integrate_array(np.sum(current.gradient * direction, axis=0)))
        gnorm = float(np.sqrt(max(slope, 0.0)))
        if alpha is None:
            alpha = min(1.0, opts.initial_step_norm / max(gnorm, 1e-300))

        if iteration % opts.log_every == 0:
            logger.info(f"Iteration {iteration}: J={current.value:.12g}, gradient={gnorm:.3e}, step={alpha:.3e}")
        if gnorm < opts.gradient_tolerance:
            break
        if iteration == opts.max_iters:
            raise NonConvergence(f"Minimization did not reach gradient {opts.gradient_tolerance:g} "
                                 f"in {opts.max_iters} iterations (last {gnorm:.3e})")

        parts = current.energy
        allowance = 10.0 * np.finfo(float).eps * (abs(parts.total) + abs(parts.dirichlet)
                                                  + abs(parts.potential) + abs(parts.linear))
        step = alpha
        breach: AdmissibilityBreach | None = None
        accepted = None
        backtracks = 0
        for backtracks in range(opts.max_backtracks):
            try:
                trial = evaluate_reduced(current.w - step * direction, lam, cartan, background,
                                         opts.admissibility_margin, opts.continuation)
            except AdmissibilityBreach as exc:
                breach = exc
                step *= 0.5
                continue
            except SolverError as exc:
                logger.debug(f"Trial step {step:.3e} failed: {exc}")
                step *= 0.5
                continue
            if trial.value <= current.value - opts.armijo_c * step * slope + allowance:
                accepted = trial
                break
            step *= opts.backtrack_ratio
        if accepted is None:
            if breach is not None:
                raise AdmissibilityBreach(breach.component, breach.ratio,
                                          f"Line search left the admissible set at iteration {iteration}: {breach}")
            raise NonConvergence(f"Line search failed at iteration {iteration} (gradient {gnorm:.3e})")

        s = accepted.w - current.w
        y = accepted.gradient - current.gradient
        sy = float(background.grid.integrate_array(np.sum(s * y, axis=0)))
        if sy > 0:
            alpha = float(np.clip(metric.inner(s, s) / sy, low, high))
        else:
            alpha = float(np.clip(step, low, high))
        trace.append({
            "iteration": iteration,
            "energy": accepted.value,
            "gradient_norm": gnorm,
            "step": step,
            "backtracks": backtracks,
        })
        current = accepted

    report = verify_critical(current.state, lam, cartan, opts.verify_tolerance, metric)
    report.iterations = len(trace)
    report.trace = trace
    report.hessian = dominance_certificate(c_hessian(current.state, lam, cartan))
    report.wall_time = time.perf_counter() - started
    if current.ratio < 1.0:
        report.notes.append(f"interior admissibility: max ratio {current.ratio:.6f} < 1")
    else:
        report.notes.append(f"minimizer on the admissibility boundary: max ratio {current.ratio:.6f}")
    if not report.hessian.passed:
        report.notes.append("mean-value Hessian is not certified positive definite")
    logger.info(f"Minimization finished after {report.iterations} iterations: "
                f"J={report.energy.total:.12g}, label={report.label}")
    return report


class LocalMinimumSolver(BaseSolver):
    """Local minimizer of the reduced functional"""

    def __init__(self, options: MinimizeOptions | None = None):
        super().__init__("local-minimum", options or MinimizeOptions())

    def solve(self, problem: Problem, w0: np.ndarray | None = None,
              metric: Metric | None = None, **kwargs) -> SolveReport:
        if w0 is None:
            w0 = np.zeros_like(problem.background.u0)
        return minimize_reduced(w0, problem.lam, problem.cartan, problem.background, self.options, metric)
