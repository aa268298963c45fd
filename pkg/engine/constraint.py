# engine/constraint.py
#
# Natural constraints for the mean values c_j = ln t_j. For fixed mean-zero
# fields w each t_j solves
#     2 r_j E2_j t_j^2 - Q_j t_j + b_j / (lambda r_j) = 0,
#     Q_j(s) = E1_j + s (r_{j-1} t_{j-1} X_{j,j-1} + r_{j+1} t_{j+1} X_{j,j+1}),
# and the homotopy parameter s carries the decoupled system (s = 0) to the
# full one (s = 1). Components are 0-based here.

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

import config
from engine.cartan import CartanData
from engine.errors import (
    AdmissibilityBreach,
    ExpOverflow,
    NegativeDiscriminant,
    NonConvergence,
    StepUnderflow,
)
from engine.torus import BackgroundSet
from engine.tridiag import (
    BarrierSpec,
    TriDiagSpec,
    f_value,
    positivity_certificate,
    solve_tridiag,
)

logger = logging.getLogger("engine.constraint")


@dataclass(frozen=True, eq=False)
class ConstraintContext:
    """Integrals of exp(u0 + w) entering the constraints, fixed for one w"""
    cartan: CartanData
    lam: float
    E1: np.ndarray
    E2: np.ndarray
    X_right: np.ndarray  # X_{j,j+1}; last entry is 0
    area: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"Coupling lambda must be positive, got {self.lam}")
        N = self.cartan.N
        for name in ("E1", "E2", "X_right"):
            values = np.asarray(getattr(self, name), dtype=float)
            if values.shape != (N,):
                raise ValueError(f"{name} must have shape ({N},), got {values.shape}")
            object.__setattr__(self, name, values)
        if np.any(self.E1 <= 0) or np.any(self.E2 <= 0) or np.any(self.X_right[:-1] <= 0):
            raise ValueError("Constraint integrals must be positive")
        if np.any(self.E1 ** 2 > self.area * self.E2 * (1.0 + 1e-10)):
            raise ValueError("Integrals violate Cauchy-Schwarz: E1^2 > area * E2")

    @classmethod
    def from_fields(cls, background: BackgroundSet, w: np.ndarray, lam: float,
                    cartan: CartanData) -> "ConstraintContext":
        grid = background.grid
        exponent = background.u0 + w
        peak = np.max(exponent, axis=(-2, -1))
        if np.any(peak > config.OVERFLOW_GUARD):
            j = int(np.argmax(peak))
            raise ExpOverflow(j, float(peak[j]), config.OVERFLOW_GUARD)
        E = background.exp_u0 * np.exp(w)
        E1 = grid.integrate_array(E)
        E2 = grid.integrate_array(E * E)
        X_right = np.zeros(cartan.N)
        if cartan.N > 1:
            X_right[:-1] = grid.integrate_array(E[:-1] * E[1:])
        return cls(cartan=cartan, lam=float(lam), E1=E1, E2=E2, X_right=X_right, area=grid.area)

    @property
    def N(self) -> int:
        return self.cartan.N

    @property
    def X_left(self) -> np.ndarray:
        """X_{j,j-1}; first entry is 0"""
        return np.concatenate(([0.0], self.X_right[:-1]))

    @property
    def left_weight(self) -> np.ndarray:
        return self.cartan.r_padded[:-2] * self.X_left

    @property
    def right_weight(self) -> np.ndarray:
        return self.cartan.r_padded[2:] * self.X_right

    @property
    def threshold(self) -> np.ndarray:
        """8 b_j E2_j / lambda"""
        return 8.0 * self.cartan.b * self.E2 / self.lam

    def coupling(self, t: np.ndarray) -> np.ndarray:
        """r_{j-1} t_{j-1} X_{j,j-1} + r_{j+1} t_{j+1} X_{j,j+1}"""
        t_prev = np.concatenate(([0.0], t[:-1]))
        t_next = np.concatenate((t[1:], [0.0]))
        return self.left_weight * t_prev + self.right_weight * t_next


@dataclass
class ContinuationOptions:
    initial_step: float = config.CONTINUATION_INITIAL_STEP
    step_floor: float = config.CONTINUATION_STEP_FLOOR
    newton_tolerance: float = config.NEWTON_TOLERANCE
    newton_max_iters: int = config.NEWTON_MAX_ITERS
    max_halvings: int = config.NEWTON_MAX_HALVINGS
    envelope_constant: float = config.ENVELOPE_CONSTANT

    def __post_init__(self):
        if not 0 < self.step_floor <= self.initial_step <= 1:
            raise ValueError(f"Need 0 < step_floor <= initial_step <= 1, got {self.step_floor}, {self.initial_step}")
        if self.newton_tolerance <= 0 or self.newton_max_iters < 1:
            raise ValueError("Newton tolerance and iteration cap must be positive")
        if self.envelope_constant <= 1:
            raise ValueError(f"Envelope constant must exceed 1, got {self.envelope_constant}")


@dataclass
class ConstraintSolution:
    t: np.ndarray
    epsilon: np.ndarray
    s: float
    jacobian_det: float
    residual_norm: float
    steps: int = 0
    rejections: int = 0
    certified: bool = True
    within_envelope: bool = True
    det_trace: list[tuple[float, float]] = field(default_factory=list)

    @property
    def c(self) -> np.ndarray:
        return np.log(self.t)


def _as_eps(eps, N: int) -> np.ndarray:
    eps = np.broadcast_to(np.asarray(eps, dtype=np.int8), (N,)).copy()
    if not np.isin(eps, (0, 1)).all():
        raise ValueError(f"Branch signs must be 0 or 1, got {eps}")
    return eps


def admissibility_ratio(ctx: ConstraintContext) -> np.ndarray:
    """8 b_j E2_j / (lambda E1_j^2); the set A is where every ratio is <= 1"""
    return ctx.threshold / ctx.E1 ** 2


def admissible(ctx: ConstraintContext) -> bool:
    return bool(np.all(ctx.E1 ** 2 >= ctx.threshold))


def first_violation(ctx: ConstraintContext, margin: float = 1.0) -> int | None:
    ratio = admissibility_ratio(ctx)
    bad = np.flatnonzero(ratio > margin)
    return int(bad[0]) if bad.size else None


def q_tilde(ctx: ConstraintContext, t: np.ndarray, s: float, j: int) -> float:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive componentwise")
    return float(ctx.E1[j] + s * ctx.coupling(t)[j])


def q_tilde_all(ctx: ConstraintContext, t: np.ndarray, s: float) -> np.ndarray:
    return ctx.E1 + s * ctx.coupling(np.asarray(t, dtype=float))


def _discriminant(ctx: ConstraintContext, Q: np.ndarray, strict: bool = False) -> np.ndarray:
    D = Q ** 2 - ctx.threshold
    bad = np.flatnonzero(D <= 0) if strict else np.flatnonzero(D < 0)
    if bad.size:
        j = int(bad[0])
        raise NegativeDiscriminant(j, float(D[j]))
    return D


def branch_root(ctx: ConstraintContext, Q: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Root of the constraint quadratic; eps = 1 takes the larger root"""
    D = _discriminant(ctx, Q)
    sqrt_D = np.sqrt(D)
    r, b, E2 = ctx.cartan.r, ctx.cartan.b, ctx.E2
    larger = (Q + sqrt_D) / (4.0 * r * E2)
    # Conjugate form of (Q - sqrt D) / (4 r E2), free of cancellation
    smaller = 2.0 * b / (ctx.lam * r * (Q + sqrt_D))
    return np.where(eps == 1, larger, smaller)


def _root_slope(ctx: ConstraintContext, Q: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """d root / d Q for each component"""
    D = _discriminant(ctx, Q, strict=True)
    sqrt_D = np.sqrt(D)
    r, b, E2 = ctx.cartan.r, ctx.cartan.b, ctx.E2
    up = (sqrt_D + Q) / (4.0 * r * E2 * sqrt_D)
    down = -2.0 * b / (ctx.lam * r * sqrt_D * (sqrt_D + Q))
    return np.where(eps == 1, up, down)


def phi(ctx: ConstraintContext, t: np.ndarray, s: float, eps) -> np.ndarray:
    """Homotopy residual t_j - root_j(Q_j(s))"""
    t = np.asarray(t, dtype=float)
    eps = _as_eps(eps, ctx.N)
    return t - branch_root(ctx, q_tilde_all(ctx, t, s), eps)


def quadratic_residual(ctx: ConstraintContext, t: np.ndarray, s: float) -> np.ndarray:
    """2 r E2 t^2 - Q t + b / (lambda r), the constraint before solving for t"""
    t = np.asarray(t, dtype=float)
    r = ctx.cartan.r
    return 2.0 * r * ctx.E2 * t ** 2 - q_tilde_all(ctx, t, s) * t + ctx.cartan.b / (ctx.lam * r)


def phi_jacobian(ctx: ConstraintContext, t: np.ndarray, s: float, eps) -> TriDiagSpec:
    """d phi / d t as a unit-diagonal tri-diagonal family with row signs eps"""
    t = np.asarray(t, dtype=float)
    eps = _as_eps(eps, ctx.N)
    if s == 0.0:
        zeros = np.zeros(ctx.N)
        return TriDiagSpec.from_split(zeros, zeros, eps, eps)
    slope = _root_slope(ctx, q_tilde_all(ctx, t, s), eps)
    alpha_sub = np.abs(slope) * s * ctx.left_weight
    alpha_sup = np.abs(slope) * s * ctx.right_weight
    return TriDiagSpec.from_split(alpha_sub, alpha_sup, eps, eps)


def phi_s_derivative(ctx: ConstraintContext, t: np.ndarray, s: float, eps) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    eps = _as_eps(eps, ctx.N)
    slope = _root_slope(ctx, q_tilde_all(ctx, t, s), eps)
    return -slope * ctx.coupling(t)


def scaled_jacobian(ctx: ConstraintContext, t: np.ndarray, s: float, eps) -> TriDiagSpec:
    """diag(t)^-1 (d phi / d t) diag(t): same determinant, neighbours weighted by t_{j+-1}"""
    return phi_jacobian(ctx, t, s, eps).scaled(np.asarray(t, dtype=float))


def barrier_weights(ctx: ConstraintContext, t: np.ndarray) -> BarrierSpec:
    """tau_j = left share of the coupling of component j"""
    t = np.asarray(t, dtype=float)
    if ctx.N == 1:
        return BarrierSpec(np.array([0.5]))
    t_prev = np.concatenate(([0.0], t[:-1]))
    t_next = np.concatenate((t[1:], [0.0]))
    left = ctx.left_weight * t_prev
    right = ctx.right_weight * t_next
    return BarrierSpec(np.clip(left / (left + right), 0.0, 1.0))


def jacobian_certificate(ctx: ConstraintContext, t: np.ndarray, s: float, eps) -> bool:
    """Barrier certificate for the scaled Jacobian; False when the hypothesis fails"""
    return positivity_certificate(scaled_jacobian(ctx, t, s, eps), barrier_weights(ctx, t))


def solve_s0(ctx: ConstraintContext, eps) -> np.ndarray:
    """Decoupled solution: each t_j is a root with Q_j = E1_j"""
    eps = _as_eps(eps, ctx.N)
    j = first_violation(ctx)
    if j is not None:
        raise AdmissibilityBreach(j, float(admissibility_ratio(ctx)[j]))
    return branch_root(ctx, ctx.E1.copy(), eps)


def _newton(ctx: ConstraintContext, t0: np.ndarray, s: float, eps: np.ndarray,
            opts: ContinuationOptions, dense: bool = False) -> tuple[np.ndarray, float, int]:
    """Damped Newton on phi(., s); returns (t, residual, iterations)"""
    t = np.array(t0, dtype=float)
    for it in range(opts.newton_max_iters + 1):
        F = phi(ctx, t, s, eps)
        res = float(np.max(np.abs(F)))
        tol = opts.newton_tolerance * (1.0 + float(np.max(np.abs(t))))
        if res <= tol:
            return t, res, it
        if it == opts.newton_max_iters:
            break
        dt = solve_tridiag(phi_jacobian(ctx, t, s, eps), F, dense=dense)
        step = 1.0
        for _ in range(opts.max_halvings):
            trial = t - step * dt
            if np.all(trial > 0):
                try:
                    trial_res = float(np.max(np.abs(phi(ctx, trial, s, eps))))
                except NegativeDiscriminant:
                    trial_res = np.inf
                if trial_res < res or trial_res <= tol:
                    t = trial
                    break
            step *= 0.5
        else:
            raise NonConvergence(f"Newton damping exhausted at s={s:.6f} (residual {res:.3e})")
    raise NonConvergence(f"Newton did not converge at s={s:.6f} in {opts.newton_max_iters} iterations")


def continuation_solve(ctx: ConstraintContext, eps=1,
                       opts: ContinuationOptions | None = None) -> ConstraintSolution:
    """Track the eps-branch from s = 0 to s = 1 with Euler predictor and Newton corrector"""
    opts = opts or ContinuationOptions()
    eps = _as_eps(eps, ctx.N)
    t = solve_s0(ctx, eps)
    s, ds = 0.0, opts.initial_step
    steps = rejections = 0
    certified = True
    det_trace = [(0.0, 1.0)]

    if ctx.N == 1:
        # No neighbours: Q does not depend on s
        s = 1.0
        det_trace.append((1.0, 1.0))

    while s < 1.0:
        s_new = min(1.0, s + ds)
        try:
            try:
                tangent = -solve_tridiag(phi_jacobian(ctx, t, s, eps), phi_s_derivative(ctx, t, s, eps))
                predicted = t + (s_new - s) * tangent
            except NegativeDiscriminant:
                predicted = t.copy()
            if np.any(predicted <= 0):
                predicted = t.copy()
            t_new, _, _ = _newton(ctx, predicted, s_new, eps, opts)
        except (NegativeDiscriminant, NonConvergence) as exc:
            rejections += 1
            ds *= 0.5
            logger.debug(f"Continuation step to s={s_new:.6f} rejected: {exc}; step now {ds:.3g}")
            if ds < opts.step_floor:
                raise StepUnderflow(s, ds) from exc
            continue

        jac = phi_jacobian(ctx, t_new, s_new, eps)
        det = f_value(jac)
        step_certified = jacobian_certificate(ctx, t_new, s_new, eps) and det > 0
        if not step_certified:
            certified = False
            logger.warning(f"Jacobian certificate failed at s={s_new:.6f} (det={det:.3e}, eps={eps.tolist()})")
        t, s = t_new, s_new
        det_trace.append((s, det))
        steps += 1
        ds = min(2.0 * ds, opts.initial_step)

    # Final polish at s = 1; the dense solve takes over if the certificate failed
    t, residual, _ = _newton(ctx, t, 1.0, eps, opts, dense=not certified)
    det = f_value(phi_jacobian(ctx, t, 1.0, eps))
    envelope = t * np.sqrt(ctx.E2)
    C = opts.envelope_constant
    within = bool(np.all((envelope >= 1.0 / C) & (envelope <= C)))
    if not within:
        logger.warning(f"Solution outside envelope [1/C, C] with C={C:g}: t*sqrt(E2)={envelope}")
    logger.debug(f"Continuation eps={eps.tolist()} reached s=1 in {steps} steps "
                 f"({rejections} rejections), det={det:.6g}, residual={residual:.3e}")
    return ConstraintSolution(
        t=t, epsilon=eps, s=1.0, jacobian_det=det, residual_norm=residual,
        steps=steps, rejections=rejections, certified=certified,
        within_envelope=within, det_trace=det_trace,
    )


def refine(ctx: ConstraintContext, t0: np.ndarray, eps=1, s: float = 1.0,
           opts: ContinuationOptions | None = None) -> np.ndarray:
    """Damped Newton from an arbitrary positive start"""
    opts = opts or ContinuationOptions()
    t0 = np.asarray(t0, dtype=float)
    if np.any(t0 <= 0):
        raise ValueError("Newton start must be positive")
    t, _, _ = _newton(ctx, t0, s, _as_eps(eps, ctx.N), opts)
    return t


def uniqueness_spread(ctx: ConstraintContext, solution: ConstraintSolution,
                      rng: np.random.Generator, starts: int = 2, scale: float = 1e-3,
                      opts: ContinuationOptions | None = None) -> float:
    """Largest deviation of Newton restarts from perturbed copies of the solution"""
    spread = 0.0
    for _ in range(starts):
        start = solution.t * (1.0 + scale * rng.uniform(-1.0, 1.0, ctx.N))
        t = refine(ctx, start, solution.epsilon, 1.0, opts)
        spread = max(spread, float(np.max(np.abs(t - solution.t))))
    return spread


def sign_patterns(N: int) -> list[np.ndarray]:
    return [np.array(p, dtype=np.int8) for p in itertools.product((1, 0), repeat=N)]


def solve_all_patterns(ctx: ConstraintContext, opts: ContinuationOptions | None = None,
                       workers: int = config.MAX_WORKERS) -> list[ConstraintSolution]:
    """Continuation for every eps in {0,1}^N, patterns in parallel"""
    if ctx.N > config.SWEEP_MAX_RANK:
        raise ValueError(f"Full sign sweep limited to N <= {config.SWEEP_MAX_RANK}, got {ctx.N}")
    patterns = sign_patterns(ctx.N)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda eps: continuation_solve(ctx, eps, opts), patterns))
