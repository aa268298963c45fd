# engine/errors.py


class SolverError(RuntimeError):
    """Base class for all numerical failures raised by the engine"""


class AdmissibilityBreach(SolverError):
    """The discriminant condition fails for some component"""

    def __init__(self, component: int, ratio: float | None = None, message: str | None = None):
        self.component = component
        self.ratio = ratio
        detail = f" (ratio={ratio:.6g})" if ratio is not None else ""
        super().__init__(message or f"Admissibility violated in component {component}{detail}")


class NegativeDiscriminant(SolverError):
    """The constraint quadratic has no real root for some component"""

    def __init__(self, component: int, discriminant: float):
        self.component = component
        self.discriminant = discriminant
        super().__init__(f"Negative discriminant {discriminant:.6g} in component {component}")


class StepUnderflow(SolverError):
    """Continuation step size fell below the configured floor"""

    def __init__(self, s: float, step: float):
        self.s = s
        self.step = step
        super().__init__(f"Continuation stalled at s={s:.8f} with step {step:.3g}")


class NonConvergence(SolverError):
    pass


class PathCollapse(SolverError):
    """The maximal path node slid into an endpoint basin"""


class ExpOverflow(SolverError):
    def __init__(self, component: int, value: float, guard: float):
        self.component = component
        self.value = value
        super().__init__(f"u exceeds overflow guard in component {component}: {value:.4g} > {guard:g}")


class CertificateViolation(SolverError):
    """A proven inequality failed numerically"""


class ConfigError(ValueError):
    """A run configuration could not be read or validated"""
