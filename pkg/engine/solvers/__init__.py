# engine/solvers/__init__.py

from engine.report import SolveReport
from engine.solvers.base import BaseSolver, Problem
from engine.solvers.local_minimum import LocalMinimumSolver, MinimizeOptions, minimize_reduced
from engine.solvers.mountain_pass import MountainPassOptions, MountainPassResult, MountainPassSolver, mountain_pass

__all__ = [
    "BaseSolver",
    "Problem",
    "SolveReport",
    "LocalMinimumSolver",
    "MinimizeOptions",
    "minimize_reduced",
    "MountainPassOptions",
    "MountainPassResult",
    "MountainPassSolver",
    "mountain_pass",
]
