# engine/report.py

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from engine.diagnostics import BoundsReport
from engine.energy import DominanceCertificate, EnergyBreakdown
from engine.state import SystemState

CRITICAL = "critical"
NOT_CRITICAL = "not-critical"
DEGENERATE = "degenerate-minimizer"


@dataclass
class SolveReport:
    """Diagnostics of one critical-point candidate"""
    state: SystemState
    energy: EnergyBreakdown
    gradient_norm: float
    flux_residuals: np.ndarray
    constraint_residual: float
    strong_residual: float
    label: str = NOT_CRITICAL
    iterations: int = 0
    wall_time: float = 0.0
    rhs_integrals: np.ndarray | None = None
    summed_identity: float = 0.0
    branches: list[int] = field(default_factory=list)
    bounds: BoundsReport | None = None
    hessian: DominanceCertificate | None = None
    level: float | None = None
    trace: list[dict[str, Any]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def is_critical(self) -> bool:
        return self.label == CRITICAL

    def relative_flux(self, b: np.ndarray) -> np.ndarray:
        return np.abs(self.flux_residuals) / b

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "energy": self.energy.to_dict(),
            "gradient_norm": self.gradient_norm,
            "flux_residuals": np.asarray(self.flux_residuals).tolist(),
            "constraint_residual": self.constraint_residual,
            "strong_residual": self.strong_residual,
            "rhs_integrals": None if self.rhs_integrals is None else np.asarray(self.rhs_integrals).tolist(),
            "summed_identity": self.summed_identity,
            "branches": list(self.branches),
            "mean_values": self.state.c.tolist(),
            "bounds": None if self.bounds is None else self.bounds.to_dict(),
            "hessian": None if self.hessian is None else {
                "dominant": self.hessian.dominant,
                "positive_definite": self.hessian.positive_definite,
                "min_margin": self.hessian.min_margin,
                "eigenvalues": self.hessian.eigenvalues,
            },
            "level": self.level,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "notes": list(self.notes),
        }
