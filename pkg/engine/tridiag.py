# engine/tridiag.py
#
# Unit-diagonal tri-diagonal matrices T_l^(k) with rows
#   beta_{j,1} e_{j-1} + e_j + beta_{j,2} e_{j+1},
# their determinant recursion F_l^(k) and the barrier comparison used to
# certify positivity. Matrix indices j, k, l are 1-based as in the formulas.

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

import config
from engine.errors import CertificateViolation

logger = logging.getLogger("engine.tridiag")


@dataclass(frozen=True, eq=False)
class TriDiagSpec:
    """Signed off-diagonal family; sub[j-1] = beta_{j,1}, sup[j-1] = beta_{j,2}"""
    sub: np.ndarray
    sup: np.ndarray
    alpha_sub: np.ndarray | None = None
    alpha_sup: np.ndarray | None = None
    eps_sub: np.ndarray | None = None
    eps_sup: np.ndarray | None = None

    def __post_init__(self):
        sub = np.asarray(self.sub, dtype=float)
        sup = np.asarray(self.sup, dtype=float)
        if sub.ndim != 1 or sub.shape != sup.shape or sub.size == 0:
            raise ValueError(f"sub/sup must be equal-length 1-D arrays, got {sub.shape} and {sup.shape}")
        if sub[0] != 0.0 or sup[-1] != 0.0:
            raise ValueError(f"Boundary convention violated: beta_(1,1)={sub[0]}, beta_(N,2)={sup[-1]}")
        if not (np.all(np.isfinite(sub)) and np.all(np.isfinite(sup))):
            raise ValueError("Off-diagonal coefficients must be finite")
        object.__setattr__(self, "sub", sub)
        object.__setattr__(self, "sup", sup)
        if self.has_split:
            for name in ("alpha_sub", "alpha_sup"):
                object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
            for name in ("eps_sub", "eps_sup"):
                object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int8))

    @property
    def N(self) -> int:
        return self.sub.size

    @property
    def has_split(self) -> bool:
        return self.alpha_sub is not None

    @classmethod
    def from_offdiagonals(cls, lower: Sequence[float], upper: Sequence[float]) -> "TriDiagSpec":
        """lower = (beta_{2,1}, ..., beta_{N,1}), upper = (beta_{1,2}, ..., beta_{N-1,2})"""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape:
            raise ValueError(f"lower/upper length mismatch: {lower.size} vs {upper.size}")
        return cls(sub=np.concatenate(([0.0], lower)), sup=np.concatenate((upper, [0.0])))

    @classmethod
    def from_split(cls, alpha_sub, alpha_sup, eps_sub, eps_sup) -> "TriDiagSpec":
        """beta_{j,i} = (-1)^eps_{j,i} alpha_{j,i} with alpha >= 0 and eps in {0, 1}"""
        alpha_sub = np.asarray(alpha_sub, dtype=float)
        alpha_sup = np.asarray(alpha_sup, dtype=float)
        eps_sub = np.broadcast_to(np.asarray(eps_sub, dtype=np.int8), alpha_sub.shape).copy()
        eps_sup = np.broadcast_to(np.asarray(eps_sup, dtype=np.int8), alpha_sup.shape).copy()
        if np.any(alpha_sub < 0) or np.any(alpha_sup < 0):
            raise ValueError("Magnitudes alpha must be non-negative")
        if not (np.isin(eps_sub, (0, 1)).all() and np.isin(eps_sup, (0, 1)).all()):
            raise ValueError("Signs eps must be 0 or 1")
        # Signs on the unused boundary slots carry no information
        eps_sub[0] = 0
        eps_sup[-1] = 0
        sub = np.where(eps_sub == 1, -alpha_sub, alpha_sub)
        sup = np.where(eps_sup == 1, -alpha_sup, alpha_sup)
        return cls(sub=sub, sup=sup, alpha_sub=alpha_sub, alpha_sup=alpha_sup,
                   eps_sub=eps_sub, eps_sup=eps_sup)

    def beta1(self, j: int) -> float:
        return float(self.sub[j - 1]) if 1 <= j <= self.N else 0.0

    def beta2(self, j: int) -> float:
        return float(self.sup[j - 1]) if 1 <= j <= self.N else 0.0

    def _require_split(self) -> None:
        if not self.has_split:
            raise ValueError("Operation needs the sign/magnitude split form")

    def with_alpha(self, which: str, j: int, value: float) -> "TriDiagSpec":
        """Copy with alpha_{j,1} ("sub") or alpha_{j,2} ("sup") replaced"""
        self._require_split()
        alpha_sub, alpha_sup = self.alpha_sub.copy(), self.alpha_sup.copy()
        if which == "sub":
            alpha_sub[j - 1] = value
        elif which == "sup":
            alpha_sup[j - 1] = value
        else:
            raise ValueError(f"Unknown coefficient family '{which}'")
        return TriDiagSpec.from_split(alpha_sub, alpha_sup, self.eps_sub, self.eps_sup)

    def with_signs(self, eps_sub=None, eps_sup=None) -> "TriDiagSpec":
        self._require_split()
        return TriDiagSpec.from_split(
            self.alpha_sub, self.alpha_sup,
            self.eps_sub if eps_sub is None else eps_sub,
            self.eps_sup if eps_sup is None else eps_sup,
        )

    def scaled(self, weights: np.ndarray) -> "TriDiagSpec":
        """Similarity transform diag(w)^-1 T diag(w); determinants are unchanged"""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.N,) or np.any(w <= 0):
            raise ValueError("Scaling weights must be positive, one per row")
        ratio_up = np.zeros(self.N)
        ratio_down = np.zeros(self.N)
        ratio_up[:-1] = w[1:] / w[:-1]
        ratio_down[1:] = w[:-1] / w[1:]
        if self.has_split:
            return TriDiagSpec.from_split(self.alpha_sub * ratio_down, self.alpha_sup * ratio_up,
                                          self.eps_sub, self.eps_sup)
        return TriDiagSpec(sub=self.sub * ratio_down, sup=self.sup * ratio_up)


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    """Barrier weights tau_j, j = 1..len(tau), each within [0, 1]"""
    tau: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if tau.ndim != 1 or tau.size == 0:
            raise ValueError("tau must be a non-empty 1-D array")
        if not np.all(np.isfinite(tau)) or np.any(tau < 0.0) or np.any(tau > 1.0):
            raise ValueError(f"tau entries must lie in [0, 1], got {tau}")
        object.__setattr__(self, "tau", tau)

    @property
    def N(self) -> int:
        return self.tau.size

    def value(self, j: int) -> float:
        return float(self.tau[j - 1])


def _check_range(spec: TriDiagSpec, k: int, l: int) -> None:
    if not (1 <= k <= l <= spec.N):
        raise ValueError(f"Index range must satisfy 1 <= k <= l <= {spec.N}, got k={k}, l={l}")


def build_matrix(spec: TriDiagSpec, k: int = 1, l: int | None = None) -> np.ndarray:
    l = spec.N if l is None else l
    _check_range(spec, k, l)
    size = l - k + 1
    T = np.eye(size)
    rows = np.arange(size - 1)
    T[rows, rows + 1] = spec.sup[k - 1:l - 1]
    T[rows + 1, rows] = spec.sub[k:l]
    return T


def f_value(spec: TriDiagSpec, k: int = 1, l: int | None = None) -> float:
    """F_l^(k), evaluated bottom-up from F^(l+1) = F^(l) = 1"""
    l = spec.N if l is None else l
    if k < 1 or l > spec.N:
        raise ValueError(f"Index out of range: k={k}, l={l}, N={spec.N}")
    if k >= l + 2:
        return 0.0
    if k >= l:
        return 1.0
    f_far, f_near = 1.0, 1.0
    for m in range(l - 1, k - 1, -1):
        f_far, f_near = f_near, f_near - spec.beta1(m + 1) * spec.beta2(m) * f_far
    return f_near


def f_table(spec: TriDiagSpec, k: int = 1, l: int | None = None) -> dict[int, float]:
    """All F_l^(m) for m = k..l+2 from one bottom-up pass"""
    l = spec.N if l is None else l
    _check_range(spec, k, l)
    table = {l + 2: 0.0, l + 1: 1.0, l: 1.0}
    for m in range(l - 1, k - 1, -1):
        table[m] = table[m + 1] - spec.beta1(m + 1) * spec.beta2(m) * table[m + 2]
    return table


def leading_minors(spec: TriDiagSpec, k: int = 1, l: int | None = None) -> np.ndarray:
    """F_m^(k) for m = k..l, i.e. the leading principal minors of T_l^(k)"""
    l = spec.N if l is None else l
    _check_range(spec, k, l)
    minors = np.empty(l - k + 1)
    before, last = 0.0, 1.0
    for idx, m in enumerate(range(k, l + 1)):
        before, last = last, last - spec.beta1(m) * spec.beta2(m - 1) * before
        minors[idx] = last
    return minors


def det_oracle(matrix: np.ndarray) -> float:
    """Determinant by first-row cofactor expansion, memoized on the set of free columns"""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"det_oracle needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > config.DET_ORACLE_MAX_SIZE:
        raise ValueError(f"det_oracle limited to size {config.DET_ORACLE_MAX_SIZE}, got {n}")
    if n == 0:
        return 1.0

    memo: dict[int, float] = {}

    def expand(row: int, mask: int) -> float:
        if row == n:
            return 1.0
        if mask in memo:
            return memo[mask]
        total, sign = 0.0, 1.0
        for col in range(n):
            if not (mask >> col) & 1:
                continue
            entry = a[row, col]
            if entry != 0.0:
                total += sign * entry * expand(row + 1, mask & ~(1 << col))
            sign = -sign
        memo[mask] = total
        return total

    return expand(0, (1 << n) - 1)


def f_partials(spec: TriDiagSpec, k: int, l: int, j: int) -> tuple[float, float]:
    """(dF/d alpha_{j+1,1}, dF/d alpha_{j,2}); zero outside k <= j < l"""
    spec._require_split()
    if not (k <= j < l) or k < 1 or l > spec.N:
        return 0.0, 0.0
    common = f_value(spec, j + 2, l) * f_value(spec, k, j - 1)
    # beta_{j+1,1} beta_{j,2} carries the sign pair (j,2), (j+1,1)
    sign = -1.0 if (int(spec.eps_sup[j - 1]) + int(spec.eps_sub[j])) % 2 else 1.0
    d_sub = -sign * float(spec.alpha_sup[j - 1]) * common
    d_sup = -sign * float(spec.alpha_sub[j]) * common
    return d_sub, d_sup


def finite_difference_partials(spec: TriDiagSpec, k: int, l: int, j: int,
                               h: float = config.FD_STEP) -> tuple[float, float]:
    """Central differences of f_value in alpha_{j+1,1} and alpha_{j,2}"""
    spec._require_split()
    if not (k <= j < l):
        return 0.0, 0.0
    a_sub = float(spec.alpha_sub[j])
    a_sup = float(spec.alpha_sup[j - 1])
    # Magnitudes stay non-negative by differencing around max(a, h)
    c_sub, c_sup = max(a_sub, h), max(a_sup, h)
    d_sub = (f_value(spec.with_alpha("sub", j + 1, c_sub + h), k, l)
             - f_value(spec.with_alpha("sub", j + 1, c_sub - h), k, l)) / (2 * h)
    d_sup = (f_value(spec.with_alpha("sup", j, c_sup + h), k, l)
             - f_value(spec.with_alpha("sup", j, c_sup - h), k, l)) / (2 * h)
    return d_sub, d_sup


def barrier_spec(tau: BarrierSpec | Sequence[float]) -> TriDiagSpec:
    """Rows tau_j e_{j-1} + e_j + (1 - tau_j) e_{j+1}"""
    tau = tau if isinstance(tau, BarrierSpec) else BarrierSpec(np.asarray(tau, dtype=float))
    alpha_sub = tau.tau.copy()
    alpha_sup = 1.0 - tau.tau
    alpha_sub[0] = 0.0
    alpha_sup[-1] = 0.0
    return TriDiagSpec.from_split(alpha_sub, alpha_sup, 0, 0)


def barrier_f(tau: BarrierSpec | Sequence[float], k: int = 1, l: int | None = None) -> float:
    spec = barrier_spec(tau)
    l = spec.N if l is None else l
    _check_range(spec, k, l)
    return f_value(spec, k, l)


def unsigned(spec: TriDiagSpec) -> TriDiagSpec:
    """Same magnitudes with every eps set to 0"""
    spec._require_split()
    return spec.with_signs(np.zeros_like(spec.eps_sub), np.zeros_like(spec.eps_sup))


def with_pair_unsigned(spec: TriDiagSpec, i: int) -> TriDiagSpec:
    """Copy with eps_{i,2} = eps_{i+1,1} = 0"""
    spec._require_split()
    if not (1 <= i < spec.N):
        raise ValueError(f"Pair index must satisfy 1 <= i < {spec.N}, got {i}")
    eps_sub, eps_sup = spec.eps_sub.copy(), spec.eps_sup.copy()
    eps_sup[i - 1] = 0
    eps_sub[i] = 0
    return spec.with_signs(eps_sub, eps_sup)


def pair_flip_gap(spec: TriDiagSpec, k: int, l: int, i: int) -> tuple[float, float]:
    """Observed F - F(pair unsigned) and the closed-form value of that gap"""
    reduced = with_pair_unsigned(spec, i)
    observed = f_value(spec, k, l) - f_value(reduced, k, l)
    if not (k <= i < l):
        return observed, 0.0
    odd = (int(spec.eps_sup[i - 1]) + int(spec.eps_sub[i])) % 2 == 1
    if not odd:
        return observed, 0.0
    predicted = (2.0 * float(spec.alpha_sub[i]) * float(spec.alpha_sup[i - 1])
                 * f_value(spec, k, i - 1) * f_value(spec, i + 2, l))
    return observed, predicted


@dataclass
class CertificateChain:
    """Values of the comparison chain F >= F0 > Fbar >= 0"""
    hypothesis: bool
    F: float
    F0: float
    Fbar: float

    @property
    def margins(self) -> tuple[float, float, float]:
        return self.F - self.F0, self.F0 - self.Fbar, self.Fbar


def barrier_hypothesis(spec: TriDiagSpec, tau: BarrierSpec, k: int, l: int) -> bool:
    """0 <= alpha_{j,2} < 1 - tau_j and 0 <= alpha_{j+1,1} < tau_{j+1} for j = k..l-1"""
    spec._require_split()
    for j in range(k, l):
        a_sup = float(spec.alpha_sup[j - 1])
        a_sub = float(spec.alpha_sub[j])
        if not (0.0 <= a_sup < 1.0 - tau.value(j)):
            return False
        if not (0.0 <= a_sub < tau.value(j + 1)):
            return False
    return True


def certificate_chain(spec: TriDiagSpec, tau: BarrierSpec | Sequence[float],
                      k: int = 1, l: int | None = None) -> CertificateChain:
    tau = tau if isinstance(tau, BarrierSpec) else BarrierSpec(np.asarray(tau, dtype=float))
    l = spec.N if l is None else l
    _check_range(spec, k, l)
    if tau.N != spec.N:
        raise ValueError(f"tau has {tau.N} entries, expected {spec.N}")
    return CertificateChain(
        hypothesis=barrier_hypothesis(spec, tau, k, l),
        F=f_value(spec, k, l),
        F0=f_value(unsigned(spec), k, l),
        Fbar=barrier_f(tau, k, l),
    )


def positivity_certificate(spec: TriDiagSpec, tau: BarrierSpec | Sequence[float],
                           k: int = 1, l: int | None = None,
                           slack: float = config.CERTIFICATE_SLACK) -> bool:
    """True iff the barrier hypothesis holds; the implied chain is then asserted"""
    l = spec.N if l is None else l
    chain = certificate_chain(spec, tau, k, l)
    if not chain.hypothesis:
        return False
    broken = []
    if not chain.F > 0.0:
        broken.append(f"F={chain.F:.3e} <= 0")
    if chain.F < chain.F0 - slack:
        broken.append(f"F={chain.F:.17g} < F0={chain.F0:.17g}")
    if k < l and not chain.F0 > chain.Fbar - slack:
        broken.append(f"F0={chain.F0:.17g} <= Fbar={chain.Fbar:.17g}")
    if chain.Fbar < -slack:
        broken.append(f"Fbar={chain.Fbar:.3e} < 0")
    if broken:
        raise CertificateViolation(f"Positivity chain broken on [{k}, {l}]: " + "; ".join(broken))
    return True


def thomas_solve(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve lower_i x_{i-1} + diag_i x_i + upper_i x_{i+1} = rhs_i (lower[0], upper[-1] unused)"""
    lower = np.asarray(lower, dtype=float)
    diag = np.asarray(diag, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = diag.size
    scale = max(np.max(np.abs(diag)), np.max(np.abs(lower)), np.max(np.abs(upper)), 1e-300)
    tiny = 64 * np.finfo(float).eps * scale

    c = np.zeros(n)
    d = np.zeros(n)
    pivot = diag[0]
    if abs(pivot) <= tiny:
        return _banded_fallback(lower, diag, upper, rhs)
    c[0] = upper[0] / pivot if n > 1 else 0.0
    d[0] = rhs[0] / pivot
    for i in range(1, n):
        pivot = diag[i] - lower[i] * c[i - 1]
        if abs(pivot) <= tiny:
            return _banded_fallback(lower, diag, upper, rhs)
        c[i] = upper[i] / pivot if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot

    x = np.empty(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _banded_fallback(lower, diag, upper, rhs) -> np.ndarray:
    logger.warning("Thomas recursion hit a vanishing pivot; using banded LU with pivoting")
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return scipy.linalg.solve_banded((1, 1), ab, rhs)


def solve_tridiag(spec: TriDiagSpec, rhs: np.ndarray, dense: bool = False) -> np.ndarray:
    """Solve T x = rhs for the full unit-diagonal matrix of spec"""
    if dense:
        return np.linalg.solve(build_matrix(spec), rhs)
    return thomas_solve(spec.sub, np.ones(spec.N), spec.sup, rhs)
