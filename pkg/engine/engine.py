# engine/engine.py

import logging
from functools import cached_property

import numpy as np

import config
from cli.schemas import RunConfig
from engine.appendix import AppendixOptions, CheckRow, run_appendix_suite
from engine.cartan import CartanData
from engine.constraint import (
    ConstraintContext,
    ContinuationOptions,
    admissibility_ratio,
    continuation_solve,
    first_violation,
    solve_all_patterns,
    uniqueness_spread,
)
from engine.energy import Metric
from engine.errors import AdmissibilityBreach
from engine.report import SolveReport
from engine.solver_factory import SolverFactory
from engine.solvers.base import Problem
from engine.solvers.local_minimum import MinimizeOptions
from engine.solvers.mountain_pass import MountainPassOptions, MountainPassResult
from engine.state import SystemState
from engine.torus import BackgroundSet, TorusGrid, VortexSet, build_backgrounds
from engine.verify import verify_critical

logger = logging.getLogger("engine.engine")


class SolveEngine:
    """Builds grid, backgrounds and Cartan data from a run configuration and drives the pipelines"""

    def __init__(self, run: RunConfig):
        self.run = run
        logger.info(f"SolveEngine initialized: N={run.N}, counts={run.counts()}, "
                    f"grid {run.resolution}^2, lambda={self.lam:.6g} (lambda0={self.cartan.lambda0:.6g})")

    @cached_property
    def grid(self) -> TorusGrid:
        return TorusGrid.square(self.run.resolution, self.run.periods)

    @cached_property
    def vortices(self) -> VortexSet:
        components = [[(entry.point, entry.multiplicity) for entry in component] for component in self.run.vortices]
        return VortexSet.from_relative(self.run.periods, components)

    @cached_property
    def background(self) -> BackgroundSet:
        return build_backgrounds(self.grid, self.vortices, self.run.background_mode)

    @cached_property
    def cartan(self) -> CartanData:
        return CartanData.build(self.run.N, self.vortices.counts, self.grid.area)

    @cached_property
    def lam(self) -> float:
        if self.run.lambda_ is not None:
            return float(self.run.lambda_)
        return float(self.run.lambda_multiple) * self.cartan.lambda0

    @cached_property
    def metric(self) -> Metric:
        return Metric(self.grid, self.cartan, self.lam, self.run.preconditioner_shift)

    @property
    def problem(self) -> Problem:
        return Problem(self.background, self.cartan, self.lam)

    def continuation_options(self) -> ContinuationOptions:
        return ContinuationOptions(**self.run.continuation.model_dump())

    def minimize_options(self) -> MinimizeOptions:
        return MinimizeOptions(continuation=self.continuation_options(), **self.run.minimize.model_dump())

    def mountain_pass_options(self) -> MountainPassOptions:
        return MountainPassOptions(**self.run.mountain_pass.model_dump())

    def appendix_options(self) -> AppendixOptions:
        return AppendixOptions(seed=self.run.seed, **self.run.appendix.model_dump())

    def solve_minimum(self, w0: np.ndarray | None = None) -> SolveReport:
        solver = SolverFactory.create_solver("local-minimum", self.minimize_options())
        return solver.solve(self.problem, w0=w0, metric=self.metric)

    def solve_mountain_pass(self, minimizer: SystemState | None = None) -> tuple[SolveReport | None, MountainPassResult]:
        """Second solution; runs the minimization first when no minimizer is supplied"""
        minimum_report = None
        if minimizer is None:
            minimum_report = self.solve_minimum()
            minimizer = minimum_report.state
        solver = SolverFactory.create_solver("mountain-pass", self.mountain_pass_options())
        return minimum_report, solver.solve(self.problem, minimizer=minimizer, metric=self.metric)

    def appendix_check(self) -> list[CheckRow]:
        return run_appendix_suite(self.appendix_options())

    def random_mean_zero(self, rng: np.random.Generator, amplitude: float, modes: int) -> np.ndarray:
        """Band-limited random mean-zero fields with sup norm equal to amplitude"""
        x, y = self.grid.coordinates
        L1, L2 = self.grid.periods
        w = np.zeros((self.run.N,) + self.grid.shape)
        for j in range(self.run.N):
            for k1 in range(-modes, modes + 1):
                for k2 in range(0, modes + 1):
                    if k2 == 0 and k1 <= 0:
                        continue
                    phase = 2.0 * np.pi * (k1 * x / L1 + k2 * y / L2)
                    a, b = rng.normal(size=2) / (1.0 + k1 * k1 + k2 * k2)
                    w[j] += a * np.cos(phase) + b * np.sin(phase)
        w -= np.mean(w, axis=(-2, -1), keepdims=True)
        peak = np.max(np.abs(w))
        return w * (amplitude / peak) if peak > 0 else w

    def admissible_sample(self, rng: np.random.Generator, amplitude: float, modes: int,
                          max_halvings: int = 30) -> tuple[np.ndarray, ConstraintContext]:
        """Random w, shrunk until it sits inside the admissibility margin"""
        w = self.random_mean_zero(rng, amplitude, modes)
        for _ in range(max_halvings):
            ctx = ConstraintContext.from_fields(self.background, w, self.lam, self.cartan)
            if first_violation(ctx, config.ADMISSIBILITY_MARGIN) is None:
                return w, ctx
            w = 0.5 * w
        w = np.zeros_like(w)
        ctx = ConstraintContext.from_fields(self.background, w, self.lam, self.cartan)
        j = first_violation(ctx, config.ADMISSIBILITY_MARGIN)
        if j is not None:
            raise AdmissibilityBreach(j, float(admissibility_ratio(ctx)[j]))
        logger.warning(f"No admissible sample after {max_halvings} halvings of amplitude {amplitude:g}; using w = 0")
        return w, ctx

    def constraint_sweep(self) -> list[dict]:
        """All sign patterns on random admissible w: roots, determinants, uniqueness and root ordering"""
        sweep = self.run.sweep
        rng = np.random.default_rng(self.run.seed)
        opts = self.continuation_options()
        rows: list[dict] = []
        for sample in range(sweep.samples):
            _, ctx = self.admissible_sample(rng, sweep.amplitude, sweep.modes)
            solutions = solve_all_patterns(ctx, opts)
            reference = continuation_solve(ctx, 1, opts)
            upper = next(s for s in solutions if np.all(s.epsilon == 1))
            for solution in solutions:
                spread = uniqueness_spread(ctx, solution, rng, opts=opts)
                ones = solution.epsilon == 1
                # every eps_j = 0 root sits below every eps_j = 1 root of the same quadratic
                ordered = bool(np.all(solution.t[~ones] < upper.t[~ones])) if np.any(~ones) else True
                rows.append({
                    "sample": sample,
                    "pattern": "".join(str(int(e)) for e in solution.epsilon),
                    "t": " ".join(f"{x:.17g}" for x in solution.t),
                    "jacobian_det": solution.jacobian_det,
                    "residual": solution.residual_norm,
                    "certified": solution.certified,
                    "within_envelope": solution.within_envelope,
                    "uniqueness_spread": spread,
                    "unique": spread <= sweep.uniqueness_tolerance,
                    "root_ordering": ordered,
                    "matches_c_plus": bool(np.all(ones)) and bool(
                        np.allclose(solution.t, reference.t, rtol=1e-12, atol=0.0)),
                })
            logger.info(f"Sweep sample {sample}: {len(solutions)} patterns, "
                        f"min det {min(s.jacobian_det for s in solutions):.6g}")
        return rows

    def state_from_v(self, v: np.ndarray) -> SystemState:
        v = np.asarray(v, dtype=float)
        expected = (self.run.N,) + self.grid.shape
        if v.shape != expected:
            raise ValueError(f"Fields have shape {v.shape}, configuration expects {expected}")
        return SystemState.from_v(self.background, v)

    def verify(self, v: np.ndarray) -> SolveReport:
        return verify_critical(self.state_from_v(v), self.lam, self.cartan,
                               self.run.minimize.verify_tolerance, self.metric)
