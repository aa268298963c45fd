# engine/solvers/base.py

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any

from engine.cartan import CartanData
from engine.torus import BackgroundSet, TorusGrid


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything a solver needs besides its options"""
    background: BackgroundSet
    cartan: CartanData
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.background.N != self.cartan.N:
            raise ValueError(f"Background has {self.background.N} components, Cartan data has {self.cartan.N}")

    @property
    def grid(self) -> TorusGrid:
        return self.background.grid


class BaseSolver(ABC):
    """Abstract base class for critical-point solvers"""

    def __init__(self, name: str, options: Any = None):
        self.name = name
        self.options = options

    @abstractmethod
    def solve(self, problem: Problem, **kwargs) -> Any:
        """Run the solver on a problem and return its report"""
        pass
