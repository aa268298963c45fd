# engine/cartan.py

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np


def _check_rank(N: int) -> None:
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"Rank must be a positive integer, got {N!r}")


def cartan_matrix(N: int) -> np.ndarray:
    """Cartan matrix K of SU(N+1): 2 on the diagonal, -1 on both neighbours"""
    _check_rank(N)
    K = 2 * np.eye(N, dtype=np.int64)
    idx = np.arange(N - 1)
    K[idx, idx + 1] = -1
    K[idx + 1, idx] = -1
    return K


def cartan_inverse(N: int) -> np.ndarray:
    """Exact inverse A = K^-1 as an object array of Fractions"""
    _check_rank(N)
    A = np.empty((N, N), dtype=object)
    for j in range(1, N + 1):
        for k in range(1, N + 1):
            A[j - 1, k - 1] = Fraction(min(j, k) * (N + 1 - max(j, k)), N + 1)
    return A


def vortex_weights(N: int) -> np.ndarray:
    _check_rank(N)
    return np.array([Fraction(j * (N + 1 - j), 2) for j in range(1, N + 1)], dtype=object)


def interaction_matrix(N: int) -> np.ndarray:
    """M = R K R, exact"""
    r = vortex_weights(N)
    K = cartan_matrix(N)
    M = np.empty((N, N), dtype=object)
    for j in range(N):
        for k in range(N):
            M[j, k] = r[j] * int(K[j, k]) * r[k]
    return M


def _check_counts(N: int, n: Sequence[int]) -> np.ndarray:
    counts = np.asarray(n)
    if counts.shape != (N,):
        raise ValueError(f"Expected {N} vortex counts, got {len(counts)}")
    if np.any(counts < 0) or not np.all(np.equal(np.mod(counts, 1), 0)):
        raise ValueError(f"Vortex counts must be non-negative integers: {list(n)}")
    if not np.any(counts > 0):
        raise ValueError("At least one vortex count must be positive")
    return counts.astype(np.int64)


def constraint_offsets(N: int, n: Sequence[int]) -> np.ndarray:
    """b_j = 4 pi sum_k a_jk n_k"""
    counts = _check_counts(N, n)
    A = cartan_inverse(N)
    exact = [sum((A[j, k] * int(counts[k]) for k in range(N)), Fraction(0)) for j in range(N)]
    return 4.0 * math.pi * np.array([float(x) for x in exact])


def lambda_lower_bound(N: int, n: Sequence[int], area: float) -> float:
    if area <= 0:
        raise ValueError(f"Area must be positive, got {area}")
    counts = _check_counts(N, n)
    A = cartan_inverse(N)
    numerator = sum((A[i, j] * int(counts[j]) for i in range(N) for j in range(N)), Fraction(0))
    denominator = sum(A.ravel(), Fraction(0))
    return 16.0 * math.pi / area * float(numerator / denominator)


def exact_matmul(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Product of two exact (object or integer) matrices without float conversion"""
    n, m = X.shape
    m2, p = Y.shape
    if m != m2:
        raise ValueError(f"Shape mismatch: {X.shape} @ {Y.shape}")
    out = np.empty((n, p), dtype=object)
    for i in range(n):
        for j in range(p):
            out[i, j] = sum((Fraction(X[i, k]) * Fraction(Y[k, j]) for k in range(m)), Fraction(0))
    return out


def exact_leading_minors(X: np.ndarray) -> list[Fraction]:
    """Leading principal minors by fraction-exact Gaussian elimination"""
    n = X.shape[0]
    work = [[Fraction(X[i, j]) for j in range(n)] for i in range(n)]
    minors = []
    det = Fraction(1)
    for p in range(n):
        pivot = work[p][p]
        if pivot == 0:
            # Without pivoting a zero pivot means this minor vanishes; later ones are not needed here
            minors.extend([Fraction(0)] * (n - p))
            return minors
        det *= pivot
        minors.append(det)
        for i in range(p + 1, n):
            factor = work[i][p] / pivot
            if factor:
                for j in range(p, n):
                    work[i][j] -= factor * work[p][j]
    return minors


@dataclass(frozen=True)
class CartanData:
    """Cartan data for one SU(N+1) problem: exact matrices plus float views"""
    N: int
    n: tuple[int, ...]
    area: float

    def __post_init__(self):
        _check_rank(self.N)
        _check_counts(self.N, self.n)
        if self.area <= 0:
            raise ValueError(f"Area must be positive, got {self.area}")

    @classmethod
    def build(cls, N: int, n: Sequence[int], area: float) -> "CartanData":
        return cls(N=int(N), n=tuple(int(x) for x in n), area=float(area))

    @cached_property
    def K_exact(self) -> np.ndarray:
        return cartan_matrix(self.N)

    @cached_property
    def A_exact(self) -> np.ndarray:
        return cartan_inverse(self.N)

    @cached_property
    def r_exact(self) -> np.ndarray:
        return vortex_weights(self.N)

    @cached_property
    def M_exact(self) -> np.ndarray:
        return interaction_matrix(self.N)

    @cached_property
    def K(self) -> np.ndarray:
        return self.K_exact.astype(float)

    @cached_property
    def A(self) -> np.ndarray:
        return self.A_exact.astype(float)

    @cached_property
    def r(self) -> np.ndarray:
        return self.r_exact.astype(float)

    @cached_property
    def r_padded(self) -> np.ndarray:
        """r with the r_0 = r_{N+1} = 0 convention, length N+2"""
        return np.concatenate(([0.0], self.r, [0.0]))

    @cached_property
    def R(self) -> np.ndarray:
        return np.diag(self.r)

    @cached_property
    def M(self) -> np.ndarray:
        return self.M_exact.astype(float)

    @cached_property
    def b(self) -> np.ndarray:
        return constraint_offsets(self.N, self.n)

    @cached_property
    def lambda0(self) -> float:
        return lambda_lower_bound(self.N, self.n, self.area)

    @property
    def r_sum(self) -> float:
        return self.N * (self.N + 1) * (self.N + 2) / 12.0
