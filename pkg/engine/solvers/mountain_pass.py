# engine/solvers/mountain_pass.py
#
# Climbing string for the second solution: a discrete path from the local
# minimizer v* to a low-energy endpoint v* - xi0, deformed so that the highest
# interior node climbs to a saddle while the others relax, with the path
# re-spaced by arclength on either side of the climber after every sweep.

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

import config
from engine.cartan import CartanData
from engine.energy import Metric, action, action_gradient, h1_distance
from engine.errors import NonConvergence, PathCollapse, SolverError
from engine.report import DEGENERATE, SolveReport
from engine.solvers.base import BaseSolver, Problem
from engine.state import SystemState
from engine.verify import verify_critical

logger = logging.getLogger("engine.solvers.mountain_pass")


@dataclass
class MountainPassOptions:
    nodes: int = config.PATH_NODES
    deformation_step: float = config.DEFORMATION_STEP
    max_node_move: float = config.MAX_NODE_MOVE
    max_sweeps: int = config.MAX_SWEEPS
    stagnation_tolerance: float = config.STAGNATION_TOLERANCE
    stagnation_window: int = config.STAGNATION_WINDOW
    degenerate_band: float = 1e-6
    gradient_tolerance: float = config.MP_GRADIENT_TOLERANCE
    polish_threshold: float = config.POLISH_THRESHOLD
    polish_max_iters: int = config.POLISH_MAX_ITERS
    xi0_initial: float = config.XI0_INITIAL
    xi0_growth: float = config.XI0_GROWTH
    xi0_cap: float = config.XI0_CAP
    energy_drop: float = config.ENERGY_DROP
    distinctness_radius: float = config.DISTINCTNESS_RADIUS
    level_margin: float = config.LEVEL_MARGIN
    step_bounds: tuple[float, float] = config.BB_STEP_BOUNDS
    verify_tolerance: float = config.VERIFY_TOLERANCE
    profile_stride: int = config.PROFILE_STRIDE
    workers: int = config.MAX_WORKERS

    def __post_init__(self):
        if self.nodes < 3:
            raise ValueError(f"A path needs at least 3 nodes, got {self.nodes}")
        if self.xi0_growth <= 1:
            raise ValueError(f"xi0 growth factor must exceed 1, got {self.xi0_growth}")
        if not 0 < self.xi0_initial <= self.xi0_cap:
            raise ValueError(f"Need 0 < xi0_initial <= xi0_cap, got {self.xi0_initial}, {self.xi0_cap}")
        if self.deformation_step <= 0 or self.max_node_move <= 0:
            raise ValueError("Deformation step and node move cap must be positive")
        if self.max_sweeps < 1 or self.stagnation_window < 2 or self.profile_stride < 1:
            raise ValueError("Sweep cap, stagnation window and profile stride must be positive")
        if self.energy_drop <= 0 or self.distinctness_radius <= 0:
            raise ValueError("Energy drop and distinctness radius must be positive")


@dataclass
class MountainPassResult:
    report: SolveReport
    level: float
    climbing_index: int
    degenerate: bool
    sweeps: int
    xi0: float
    profile: list[dict] = field(default_factory=list)


def select_xi0(vstar: SystemState, lam: float, cartan: CartanData,
               opts: MountainPassOptions | None = None) -> tuple[float, SystemState]:
    """Smallest xi0 on the doubling ladder with I(v* - xi0) < I* - drop and v* - xi0 distinct from v*"""
    opts = opts or MountainPassOptions()
    base = action(vstar, lam, cartan).total
    xi = opts.xi0_initial
    while xi <= opts.xi0_cap:
        candidate = vstar.shifted(xi)
        energy = action(candidate, lam, cartan).total
        distance = h1_distance(vstar, candidate)
        logger.debug(f"xi0={xi:g}: I={energy:.10g} (I*={base:.10g}), distance={distance:.3e}")
        if energy < base - opts.energy_drop and distance > opts.distinctness_radius:
            logger.info(f"Selected xi0={xi:g}: endpoint energy {energy:.10g} below I*={base:.10g}")
            return xi, candidate
        xi *= opts.xi0_growth
    raise NonConvergence(f"No xi0 up to {opts.xi0_cap:g} drops the energy by {opts.energy_drop:g}")


def _reparameterize(nodes: list[np.ndarray], metric: Metric) -> list[np.ndarray]:
    """Equal metric arclength between fixed end nodes, by piecewise linear interpolation"""
    if len(nodes) < 3:
        return list(nodes)
    lengths = [metric.norm(b - a) for a, b in zip(nodes[:-1], nodes[1:])]
    cumulative = np.concatenate(([0.0], np.cumsum(lengths)))
    total = cumulative[-1]
    if total <= 0:
        return list(nodes)
    spaced = [nodes[0]]
    for target in np.linspace(0.0, total, len(nodes))[1:-1]:
        k = min(int(np.searchsorted(cumulative, target, side="right")) - 1, len(nodes) - 2)
        span = cumulative[k + 1] - cumulative[k]
        theta = 0.0 if span <= 0 else (target - cumulative[k]) / span
        spaced.append((1.0 - theta) * nodes[k] + theta * nodes[k + 1])
    spaced.append(nodes[-1])
    return spaced


def _straight_path(start: np.ndarray, end: np.ndarray, P: int) -> list[np.ndarray]:
    return [(1.0 - k / (P - 1)) * start + (k / (P - 1)) * end for k in range(P)]


def _path_length(nodes: list[np.ndarray], metric: Metric) -> float:
    return float(sum(metric.norm(b - a) for a, b in zip(nodes[:-1], nodes[1:])))


def _capped(move: np.ndarray, cap: float, metric: Metric) -> np.ndarray:
    size = metric.norm(move)
    return move * (cap / size) if size > cap > 0 else move


def _polish(v0: np.ndarray, background, lam: float, cartan: CartanData, metric: Metric,
            opts: MountainPassOptions) -> SystemState | None:
    """Newton-Krylov on the preconditioned residual P^-1 G(v)"""

    def residual(v: np.ndarray) -> np.ndarray:
        state = SystemState.from_v(background, v)
        return metric.apply_inverse(action_gradient(state, lam, cartan).field)

    try:
        v = scipy.optimize.newton_krylov(residual, v0, f_tol=0.1 * opts.gradient_tolerance,
                                         maxiter=opts.polish_max_iters)
    except (scipy.optimize.NoConvergence, SolverError, ValueError, np.linalg.LinAlgError) as exc:
        logger.debug(f"Newton-Krylov polish failed: {type(exc).__name__}: {exc}")
        return None
    return SystemState.from_v(background, v)


def mountain_pass(vstar: SystemState, vhat: SystemState | None, lam: float, cartan: CartanData,
                  opts: MountainPassOptions | None = None, metric: Metric | None = None) -> MountainPassResult:
    """Second critical point of I above the minimizer vstar; vhat = None picks the endpoint by select_xi0"""
    opts = opts or MountainPassOptions()
    started = time.perf_counter()
    background = vstar.background
    metric = metric or Metric(vstar.grid, cartan, lam)
    xi0 = float(np.mean(vstar.c - vhat.c)) if vhat is not None else None
    if vhat is None:
        xi0, vhat = select_xi0(vstar, lam, cartan, opts)

    base = action(vstar, lam, cartan).total
    end_energy = action(vhat, lam, cartan).total
    if end_energy >= base - opts.energy_drop:
        raise ValueError(f"Endpoint energy {end_energy:.10g} is not below I*={base:.10g} "
                         f"by the required drop {opts.energy_drop:g}")
    P = opts.nodes
    nodes = _straight_path(vstar.v, vhat.v, P)
    ceiling = max(base, end_energy) + opts.level_margin * (1.0 + abs(base))

    def evaluate(v: np.ndarray) -> tuple[float, np.ndarray]:
        state = SystemState.from_v(background, v)
        return action(state, lam, cartan).total, action_gradient(state, lam, cartan).field

    profile: list[dict] = []
    trace: list[dict] = []
    levels: list[float] = []
    low, high = opts.step_bounds
    climb_step = opts.deformation_step
    previous_climber: tuple[int, np.ndarray, np.ndarray] | None = None
    polish_gate = opts.polish_threshold
    candidate: SystemState | None = None
    degenerate = False
    sweep = 0
    climber = 0
    level = base

    with ThreadPoolExecutor(max_workers=max(1, opts.workers)) as pool:
        results = list(pool.map(evaluate, nodes[1:-1]))
        initial_level = max(e for e, _ in results)
        if initial_level <= ceiling:
            refined = 2 * P - 1
            logger.warning(f"Initial path of {P} nodes peaks at an endpoint (level {initial_level:.10g}); "
                           f"retrying with {refined} nodes")
            P = refined
            nodes = _straight_path(vstar.v, vhat.v, P)
            results = list(pool.map(evaluate, nodes[1:-1]))

        for sweep in range(opts.max_sweeps + 1):
            if sweep > 0:
                results = list(pool.map(evaluate, nodes[1:-1]))
            energies = [base] + [e for e, _ in results] + [end_energy]
            gradients = [None] + [g for _, g in results] + [None]
            climber = 1 + int(np.argmax(energies[1:-1]))
            level = energies[climber]
            levels.append(level)

            if sweep % opts.profile_stride == 0:
                profile.extend({"sweep": sweep, "node": k, "energy": e} for k, e in enumerate(energies))

            if sweep == 0 and level <= ceiling:
                raise PathCollapse(f"Initial path of {P} nodes peaks at an endpoint (level {level:.10g}, "
                                   f"I*={base:.10g}); retry with more path nodes or a farther endpoint")
            if level - base <= opts.level_margin * (1.0 + abs(base)):
                degenerate = True
                logger.warning(f"Path level {level:.10g} fell to the minimum level {base:.10g}")
                break
            if len(levels) >= opts.stagnation_window:
                window = levels[-opts.stagnation_window:]
                flat = max(window) - min(window) <= opts.stagnation_tolerance * (1.0 + abs(level))
                if flat and level - base <= opts.degenerate_band * (1.0 + abs(base)):
                    degenerate = True
                    logger.warning(f"Path level stagnated at {level:.10g}, within {opts.degenerate_band:g} of I*")
                    break

            G = gradients[climber]
            p = metric.apply_inverse(G)
            gnorm = float(np.sqrt(max(float(vstar.grid.integrate_array(np.sum(G * p, axis=0))), 0.0)))
            if sweep % 100 == 0:
                logger.info(f"Sweep {sweep}: level={level:.12g}, climber={climber}, gradient={gnorm:.3e}")
            trace.append({"sweep": sweep, "level": level, "climbing_index": climber,
                          "gradient_norm": gnorm, "step": climb_step})

            if gnorm < opts.gradient_tolerance:
                candidate = SystemState.from_v(background, nodes[climber])
                break
            if gnorm < polish_gate:
                polished = _polish(nodes[climber], background, lam, cartan, metric, opts)
                polish_gate = 0.5 * gnorm
                if polished is not None:
                    check = verify_critical(polished, lam, cartan, opts.verify_tolerance, metric)
                    if (check.is_critical and check.gradient_norm < gnorm and check.energy.total > base
                            and h1_distance(polished, vstar) > opts.distinctness_radius):
                        logger.info(f"Newton-Krylov polish accepted at sweep {sweep}")
                        candidate = polished
                        break
            if sweep == opts.max_sweeps:
                raise NonConvergence(f"Mountain pass did not converge in {opts.max_sweeps} sweeps "
                                     f"(level {level:.10g}, gradient {gnorm:.3e})")

            spacing = _path_length(nodes, metric) / (P - 1)
            cap = opts.max_node_move * spacing

            tangent = nodes[climber + 1] - nodes[climber - 1]
            tangent_norm = metric.norm(tangent)
            if tangent_norm > 0:
                tangent = tangent / tangent_norm
                # P-orthogonal reflection of the descent direction along the path
                climb = -p + 2.0 * float(vstar.grid.integrate_array(np.sum(G * tangent, axis=0))) * tangent
            else:
                climb = -p
            if previous_climber is not None and previous_climber[0] == climber:
                s = nodes[climber] - previous_climber[1]
                y = previous_climber[2] - climb
                sy = metric.inner(s, y)
                if sy != 0:
                    climb_step = float(np.clip(abs(metric.inner(s, s) / sy), low, high))
            previous_climber = (climber, nodes[climber].copy(), climb)

            moved = list(nodes)
            moved[climber] = nodes[climber] + _capped(climb_step * climb, cap, metric)
            for k in range(1, P - 1):
                if k != climber:
                    descent = -metric.apply_inverse(gradients[k])
                    moved[k] = nodes[k] + _capped(opts.deformation_step * descent, cap, metric)

            left = _reparameterize(moved[:climber + 1], metric)
            right = _reparameterize(moved[climber:], metric)
            nodes = left[:-1] + right

    if degenerate:
        candidate = SystemState.from_v(background, nodes[climber])
    if sweep % opts.profile_stride != 0:
        profile.extend({"sweep": sweep, "node": k, "energy": e} for k, e in enumerate(energies))

    if not degenerate and h1_distance(candidate, vstar) <= opts.distinctness_radius:
        raise PathCollapse(f"Saddle candidate lies within {opts.distinctness_radius:g} of the minimizer")

    report = verify_critical(candidate, lam, cartan, opts.verify_tolerance, metric)
    if not degenerate and not report.energy.total > base:
        raise PathCollapse(f"Saddle energy {report.energy.total:.10g} does not exceed I*={base:.10g}")
    if degenerate:
        report.label = DEGENERATE
        report.notes.append("mountain-pass level equals the minimum level")
    report.level = level
    report.iterations = sweep
    report.trace = trace
    report.wall_time = time.perf_counter() - started
    report.notes.append(f"xi0={xi0:g}, climbing node {climber} of {P}")
    logger.info(f"Mountain pass finished after {sweep} sweeps: level={level:.12g}, label={report.label}")
    return MountainPassResult(
        report=report, level=level, climbing_index=climber, degenerate=degenerate,
        sweeps=sweep, xi0=xi0, profile=profile,
    )


class MountainPassSolver(BaseSolver):
    """Second solution above a given local minimizer"""

    def __init__(self, options: MountainPassOptions | None = None):
        super().__init__("mountain-pass", options or MountainPassOptions())

    def solve(self, problem: Problem, minimizer: SystemState | None = None,
              metric: Metric | None = None, vhat: SystemState | None = None, **kwargs) -> MountainPassResult:
        if minimizer is None:
            raise ValueError("Mountain pass needs the local minimizer as its base point")
        return mountain_pass(minimizer, vhat, problem.lam, problem.cartan, self.options, metric)
