# engine/solver_factory.py

import logging
from typing import Any, Dict, Type

from engine.solvers.base import BaseSolver
from engine.solvers.local_minimum import LocalMinimumSolver
from engine.solvers.mountain_pass import MountainPassSolver

logger = logging.getLogger("engine.solver_factory")


class SolverFactory:
    """Factory for creating and registering critical-point solvers"""

    _solvers: Dict[str, Type[BaseSolver]] = {
        "local-minimum": LocalMinimumSolver,
        "mountain-pass": MountainPassSolver,
    }

    @classmethod
    def create_solver(cls, solver_name: str, options: Any = None) -> BaseSolver:
        """Create a solver instance by name"""
        if solver_name not in cls._solvers:
            available = list(cls._solvers.keys())
            raise ValueError(f"Unknown solver '{solver_name}'. Available solvers: {available}")

        solver_class = cls._solvers[solver_name]
        logger.debug(f"Creating solver: {solver_name}")
        return solver_class(options)

    @classmethod
    def register_solver(cls, name: str, solver_class: Type[BaseSolver]) -> None:
        """Register a new solver class"""
        cls._solvers[name] = solver_class
        logger.info(f"Registered solver: {name}")

    @classmethod
    def list_solvers(cls) -> list[str]:
        """List all available solver names"""
        return list(cls._solvers.keys())
