# engine/appendix.py

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

import config
from engine.errors import CertificateViolation
from engine.tridiag import (
    BarrierSpec,
    TriDiagSpec,
    barrier_f,
    build_matrix,
    certificate_chain,
    det_oracle,
    f_partials,
    f_value,
    finite_difference_partials,
    leading_minors,
    pair_flip_gap,
    positivity_certificate,
)

logger = logging.getLogger("engine.appendix")


@dataclass
class CheckRow:
    """One line of the appendix-check table"""
    name: str
    samples: int = 0
    passed: int = 0
    failed: int = 0
    hypothesis_false: int = 0
    max_error: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def record(self, passed: bool, error: float = 0.0) -> None:
        self.samples += 1
        if passed:
            self.passed += 1
        else:
            self.failed += 1
        if np.isfinite(error):
            self.max_error = max(self.max_error, float(error))
        else:
            self.max_error = float("inf")

    def skip(self) -> None:
        self.samples += 1
        self.hypothesis_false += 1


@dataclass
class AppendixOptions:
    samples: int = config.APPENDIX_SAMPLES
    max_size: int = config.APPENDIX_MAX_SIZE
    fd_step: float = config.FD_STEP
    fd_tolerance: float = config.FD_RELATIVE_TOLERANCE
    det_tolerance: float = config.DETERMINANT_TOLERANCE
    slack: float = config.CERTIFICATE_SLACK
    sylvester_max_size: int = config.SYLVESTER_MAX_SIZE
    seed: int = 0
    workers: int = config.MAX_WORKERS

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError(f"samples must be positive, got {self.samples}")
        if not 1 <= self.max_size <= config.DET_ORACLE_MAX_SIZE:
            raise ValueError(f"max_size must lie in [1, {config.DET_ORACLE_MAX_SIZE}], got {self.max_size}")


def random_spec(rng: np.random.Generator, size: int, low: float = -2.0, high: float = 2.0) -> TriDiagSpec:
    return TriDiagSpec.from_offdiagonals(rng.uniform(low, high, size - 1), rng.uniform(low, high, size - 1))


def random_split_spec(rng: np.random.Generator, size: int, high: float = 1.0) -> TriDiagSpec:
    alpha_sub = rng.uniform(0.0, high, size)
    alpha_sup = rng.uniform(0.0, high, size)
    alpha_sub[0] = 0.0
    alpha_sup[-1] = 0.0
    return TriDiagSpec.from_split(alpha_sub, alpha_sup, rng.integers(0, 2, size), rng.integers(0, 2, size))


def spec_inside_barrier(rng: np.random.Generator, tau: np.ndarray, signed: bool = True) -> TriDiagSpec:
    """Magnitudes drawn strictly below the barrier: alpha_{j,2} < 1 - tau_j, alpha_{j,1} < tau_j"""
    size = tau.size
    alpha_sup = rng.uniform(0.0, 1.0, size) * (1.0 - tau)
    alpha_sub = rng.uniform(0.0, 1.0, size) * tau
    alpha_sub[0] = 0.0
    alpha_sup[-1] = 0.0
    eps_sub = rng.integers(0, 2, size) if signed else 0
    eps_sup = rng.integers(0, 2, size) if signed else 0
    return TriDiagSpec.from_split(alpha_sub, alpha_sup, eps_sub, eps_sup)


def _random_range(rng: np.random.Generator, size: int) -> tuple[int, int]:
    k = int(rng.integers(1, size + 1))
    l = int(rng.integers(k, size + 1))
    return k, l


def check_determinant_identity(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    row = CheckRow("determinant_identity")
    for _ in range(opts.samples):
        size = int(rng.integers(1, opts.max_size + 1))
        spec = random_spec(rng, size)
        k, l = (1, size) if rng.random() < 0.5 else _random_range(rng, size)
        det = det_oracle(build_matrix(spec, k, l))
        err = abs(f_value(spec, k, l) - det)
        row.record(err <= opts.det_tolerance * max(1.0, abs(det)), err / max(1.0, abs(det)))
    return row


def check_derivatives(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    row = CheckRow("derivative_finite_difference")
    for _ in range(opts.samples):
        size = int(rng.integers(2, opts.max_size + 1))
        spec = random_split_spec(rng, size)
        k, l = 1, size
        j = int(rng.integers(k, l))
        analytic = np.array(f_partials(spec, k, l, j))
        numeric = np.array(finite_difference_partials(spec, k, l, j, opts.fd_step))
        err = float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))
        row.record(err <= opts.fd_tolerance, err)
    # Outside k <= j < l the partials vanish
    spec = random_split_spec(rng, 4)
    outside = f_partials(spec, 3, 4, 1) == (0.0, 0.0) and f_partials(spec, 1, 3, 3) == (0.0, 0.0)
    row.record(outside)
    return row


def check_barrier_nonnegative(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    row = CheckRow("barrier_nonnegative")
    for _ in range(opts.samples):
        size = int(rng.integers(1, opts.max_size + 1))
        tau = rng.uniform(0.0, 1.0, size)
        value = barrier_f(tau, 1, size)
        row.record(value >= -opts.slack, max(0.0, -value))
    return row


def check_barrier_singular(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    row = CheckRow("barrier_singular")
    for _ in range(opts.samples):
        size = int(rng.integers(2, opts.max_size + 1))
        tau = rng.uniform(0.0, 1.0, size)
        tau[0], tau[-1] = 0.0, 1.0
        value = barrier_f(tau, 1, size)
        row.record(abs(value) <= opts.slack, abs(value))
    row.notes.append("F_bar(0, ..., 1) = 0")
    return row


def check_certificate_chain(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    row = CheckRow("certificate_chain")
    for _ in range(opts.samples):
        size = int(rng.integers(1, opts.max_size + 1))
        tau = rng.uniform(0.0, 1.0, size)
        spec = spec_inside_barrier(rng, tau)
        try:
            certified = positivity_certificate(spec, BarrierSpec(tau), 1, size, opts.slack)
        except CertificateViolation as exc:
            row.notes.append(str(exc))
            row.record(False, float("inf"))
            continue
        if not certified:
            row.skip()
            continue
        chain = certificate_chain(spec, tau, 1, size)
        det = det_oracle(build_matrix(spec))
        err = abs(chain.F - det) / max(1.0, abs(det))
        row.record(det > 0.0 and err <= opts.det_tolerance, err)
    return row


def check_boundary_hypothesis(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    """alpha forced onto the barrier makes the hypothesis false; those are not failures"""
    row = CheckRow("certificate_boundary")
    for _ in range(max(1, opts.samples // 10)):
        size = int(rng.integers(2, opts.max_size + 1))
        tau = rng.uniform(0.05, 0.95, size)
        spec = spec_inside_barrier(rng, tau)
        j = int(rng.integers(1, size))
        spec = spec.with_alpha("sup", j, 1.0 - tau[j - 1])
        if positivity_certificate(spec, BarrierSpec(tau), 1, size, opts.slack):
            row.record(False)
        else:
            row.skip()
    return row


def check_sylvester(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    row = CheckRow("leading_minors_positive")
    for _ in range(opts.samples):
        size = int(rng.integers(1, opts.sylvester_max_size + 1))
        tau = rng.uniform(0.0, 1.0, size)
        spec = spec_inside_barrier(rng, tau, signed=False)
        minors = leading_minors(spec)
        dense = np.array([np.linalg.det(build_matrix(spec, 1, m)) for m in range(1, size + 1)])
        err = float(np.max(np.abs(minors - dense)))
        row.record(bool(np.all(minors > 0.0)) and err <= opts.det_tolerance, err)
    return row


def check_pair_reduction(opts: AppendixOptions, rng: np.random.Generator) -> CheckRow:
    """Flipping one sign pair changes F by 2 alpha alpha F_{i-1} F^(i+2) or not at all"""
    row = CheckRow("sign_pair_reduction")
    for _ in range(opts.samples):
        size = int(rng.integers(2, opts.max_size + 1))
        spec = random_split_spec(rng, size)
        i = int(rng.integers(1, size))
        observed, predicted = pair_flip_gap(spec, 1, size, i)
        err = abs(observed - predicted)
        row.record(err <= opts.det_tolerance * max(1.0, abs(predicted)), err)
    return row


CHECKS: dict[str, Callable[[AppendixOptions, np.random.Generator], CheckRow]] = {
    "determinant_identity": check_determinant_identity,
    "derivative_finite_difference": check_derivatives,
    "barrier_nonnegative": check_barrier_nonnegative,
    "barrier_singular": check_barrier_singular,
    "certificate_chain": check_certificate_chain,
    "certificate_boundary": check_boundary_hypothesis,
    "leading_minors_positive": check_sylvester,
    "sign_pair_reduction": check_pair_reduction,
}


def run_appendix_suite(opts: AppendixOptions | None = None) -> list[CheckRow]:
    """Run every property check with an independent seeded stream"""
    opts = opts or AppendixOptions()
    streams = np.random.SeedSequence(opts.seed).spawn(len(CHECKS))
    logger.info(f"Appendix suite: {len(CHECKS)} checks x {opts.samples} samples, sizes <= {opts.max_size}")

    def run(item):
        (name, check), stream = item
        row = check(opts, np.random.default_rng(stream))
        logger.info(f"{name}: {row.passed} passed, {row.failed} failed, "
                    f"{row.hypothesis_false} hypothesis-false, max error {row.max_error:.3e}")
        return row

    with ThreadPoolExecutor(max_workers=max(1, opts.workers)) as pool:
        return list(pool.map(run, zip(CHECKS.items(), streams)))
