# engine/state.py

from dataclasses import dataclass

import numpy as np

import config
from engine.errors import ExpOverflow
from engine.torus import BackgroundSet, ScalarField, TorusGrid

MEAN_ZERO_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class SystemState:
    """Unknown v = c + w: mean values c (N,) and mean-zero fields w (N, m1, m2)"""
    background: BackgroundSet
    w: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        N = self.background.N
        if w.shape != (N,) + self.grid.shape:
            raise ValueError(f"w must have shape {(N,) + self.grid.shape}, got {w.shape}")
        if c.shape != (N,):
            raise ValueError(f"c must have {N} entries, got {c.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(c))):
            raise ValueError("State contains non-finite values")
        means = np.mean(w, axis=(-2, -1))
        scale = 1.0 + np.max(np.abs(w), axis=(-2, -1))
        if np.any(np.abs(means) > MEAN_ZERO_TOLERANCE * scale):
            raise ValueError(f"w must have zero mean per component, means are {means}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "c", c)

    @classmethod
    def from_v(cls, background: BackgroundSet, v: np.ndarray) -> "SystemState":
        v = np.asarray(v, dtype=float)
        c = np.mean(v, axis=(-2, -1))
        return cls(background, v - c[:, None, None], c)

    @classmethod
    def zero(cls, background: BackgroundSet) -> "SystemState":
        return cls(background, np.zeros_like(background.u0), np.zeros(background.N))

    @property
    def grid(self) -> TorusGrid:
        return self.background.grid

    @property
    def N(self) -> int:
        return self.background.N

    @property
    def v(self) -> np.ndarray:
        return self.w + self.c[:, None, None]

    @property
    def u(self) -> np.ndarray:
        return self.background.u0 + self.v

    def exp_u(self) -> np.ndarray:
        """exp(u0 + v) per component, guarded against overflow"""
        peak = np.max(self.u, axis=(-2, -1))
        if np.any(peak > config.OVERFLOW_GUARD):
            j = int(np.argmax(peak))
            raise ExpOverflow(j, float(peak[j]), config.OVERFLOW_GUARD)
        return self.background.exp_u0 * np.exp(self.v)

    def with_c(self, c: np.ndarray) -> "SystemState":
        return SystemState(self.background, self.w, np.asarray(c, dtype=float))

    def shifted(self, xi: float) -> "SystemState":
        """The state v - xi (1, ..., 1)"""
        return self.with_c(self.c - xi)

    def perturbed(self, direction: np.ndarray, h: float) -> "SystemState":
        return SystemState.from_v(self.background, self.v + h * direction)

    def fields(self) -> list[ScalarField]:
        return [ScalarField(self.grid, vj) for vj in self.v]
