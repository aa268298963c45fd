# tests/test_tridiag.py

import logging

import numpy as np
import pytest

from engine.appendix import random_spec, random_split_spec, spec_inside_barrier
from engine.tridiag import (
    BarrierSpec,
    TriDiagSpec,
    barrier_f,
    build_matrix,
    certificate_chain,
    det_oracle,
    f_partials,
    f_table,
    f_value,
    finite_difference_partials,
    leading_minors,
    pair_flip_gap,
    positivity_certificate,
    solve_tridiag,
    thomas_solve,
    unsigned,
)


def test_boundary_convention_enforced():
    with pytest.raises(ValueError):
        TriDiagSpec(sub=np.array([1.0, 0.5]), sup=np.array([0.5, 0.0]))
    with pytest.raises(ValueError):
        TriDiagSpec(sub=np.array([0.0, 0.5]), sup=np.array([0.5, 0.2]))


def test_recursion_matches_dense_determinant(rng):
    for _ in range(200):
        size = int(rng.integers(1, 11))
        spec = random_spec(rng, size)
        k = int(rng.integers(1, size + 1))
        l = int(rng.integers(k, size + 1))
        det = np.linalg.det(build_matrix(spec, k, l))
        assert f_value(spec, k, l) == pytest.approx(det, rel=1e-10, abs=1e-10)


def test_degenerate_ranges():
    spec = TriDiagSpec.from_offdiagonals([0.3, -0.2], [0.1, 0.4])
    assert f_value(spec, 3, 3) == 1.0
    assert f_value(spec, 3, 2) == 1.0
    assert f_value(spec, 3, 1) == 0.0


def test_det_oracle(rng):
    for size in range(1, 9):
        matrix = rng.normal(size=(size, size))
        matrix[rng.random((size, size)) < 0.3] = 0.0
        assert det_oracle(matrix) == pytest.approx(np.linalg.det(matrix), rel=1e-10, abs=1e-12)
    with pytest.raises(ValueError):
        det_oracle(np.eye(13))
    with pytest.raises(ValueError):
        det_oracle(np.ones((2, 3)))


def test_table_and_minors(rng):
    spec = random_spec(rng, 7)
    table = f_table(spec, 2, 6)
    for m in range(2, 7):
        assert table[m] == pytest.approx(f_value(spec, m, 6), rel=1e-14)
    assert table[8] == 0.0 and table[7] == 1.0
    minors = leading_minors(spec, 2, 6)
    dense = [np.linalg.det(build_matrix(spec, 2, m)) for m in range(2, 7)]
    np.testing.assert_allclose(minors, dense, rtol=1e-10, atol=1e-12)


def test_partials_against_finite_differences(rng):
    for _ in range(100):
        size = int(rng.integers(2, 9))
        spec = random_split_spec(rng, size)
        j = int(rng.integers(1, size))
        analytic = np.array(f_partials(spec, 1, size, j))
        numeric = np.array(finite_difference_partials(spec, 1, size, j))
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)


def test_partials_vanish_outside_range(rng):
    spec = random_split_spec(rng, 5)
    assert f_partials(spec, 3, 5, 1) == (0.0, 0.0)
    assert f_partials(spec, 1, 3, 3) == (0.0, 0.0)


def test_barrier_nonnegative_and_singular(rng):
    for size in range(1, 11):
        assert barrier_f(rng.uniform(0.0, 1.0, size)) >= -1e-12
    for size in range(2, 11):
        tau = rng.uniform(0.0, 1.0, size)
        tau[0], tau[-1] = 0.0, 1.0
        assert abs(barrier_f(tau)) <= 1e-12


def test_barrier_rejects_out_of_range():
    with pytest.raises(ValueError):
        BarrierSpec(np.array([0.2, 1.3]))


def test_certificate_inside_barrier(rng):
    for _ in range(200):
        size = int(rng.integers(1, 11))
        tau = rng.uniform(0.0, 1.0, size)
        spec = spec_inside_barrier(rng, tau)
        if positivity_certificate(spec, tau):
            chain = certificate_chain(spec, tau)
            assert chain.F >= chain.F0 - 1e-12
            assert np.linalg.det(build_matrix(spec)) > 0


def test_certificate_false_when_hypothesis_fails():
    tau = np.array([0.0, 0.5, 1.0])
    spec = TriDiagSpec.from_split([0.0, 0.2, 0.3], [0.95, 0.6, 0.0], 1, 1)
    assert positivity_certificate(spec, tau) is False


def test_unsigned_and_pair_reduction(rng):
    for _ in range(100):
        size = int(rng.integers(2, 9))
        spec = random_split_spec(rng, size)
        assert np.all(unsigned(spec).sub >= 0) and np.all(unsigned(spec).sup >= 0)
        i = int(rng.integers(1, size))
        observed, predicted = pair_flip_gap(spec, 1, size, i)
        assert observed == pytest.approx(predicted, rel=1e-10, abs=1e-12)


def test_scaling_preserves_determinant(rng):
    spec = random_split_spec(rng, 6)
    weights = rng.uniform(0.5, 2.0, 6)
    assert f_value(spec.scaled(weights)) == pytest.approx(f_value(spec), rel=1e-12)


def test_thomas_solve_matches_dense(rng):
    spec = random_spec(rng, 9, -0.4, 0.4)
    rhs = rng.normal(size=9)
    np.testing.assert_allclose(solve_tridiag(spec, rhs), np.linalg.solve(build_matrix(spec), rhs), rtol=1e-10)
    np.testing.assert_allclose(solve_tridiag(spec, rhs, dense=True), solve_tridiag(spec, rhs), rtol=1e-10)


def test_thomas_falls_back_on_zero_pivot(caplog):
    with caplog.at_level(logging.WARNING, logger="engine.tridiag"):
        x = thomas_solve(np.array([0.0, 1.0]), np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([1.0, 2.0]))
    np.testing.assert_allclose(x, [2.0, 1.0])
    assert "banded" in caplog.text
