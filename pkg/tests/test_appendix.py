# tests/test_appendix.py

import numpy as np
import pytest

from engine.appendix import CHECKS, AppendixOptions, CheckRow, check_barrier_singular, run_appendix_suite


@pytest.fixture(scope="module")
def rows():
    return run_appendix_suite(AppendixOptions(samples=300, max_size=8, seed=7, workers=2))


def test_every_check_runs_and_passes(rows):
    assert [row.name for row in rows] == list(CHECKS)
    for row in rows:
        assert row.ok, f"{row.name}: {row.failed} failures, notes {row.notes}"
        assert row.samples > 0


def test_boundary_rows_are_hypothesis_false(rows):
    boundary = next(row for row in rows if row.name == "certificate_boundary")
    assert boundary.hypothesis_false == boundary.samples
    assert boundary.failed == 0


def test_singular_barrier_row_present(rows):
    singular = next(row for row in rows if row.name == "barrier_singular")
    assert singular.max_error <= 1e-12
    assert any("= 0" in note for note in singular.notes)


def test_suite_is_deterministic():
    opts = AppendixOptions(samples=50, max_size=6, seed=3, workers=1)
    first = [(r.name, r.passed, r.max_error) for r in run_appendix_suite(opts)]
    second = [(r.name, r.passed, r.max_error) for r in run_appendix_suite(opts)]
    assert first == second


def test_check_row_bookkeeping():
    row = CheckRow("demo")
    row.record(True, 1e-3)
    row.record(False, float("nan"))
    row.skip()
    assert (row.samples, row.passed, row.failed, row.hypothesis_false) == (3, 1, 1, 1)
    assert row.max_error == float("inf")
    assert not row.ok


def test_single_check_callable():
    row = check_barrier_singular(AppendixOptions(samples=20, max_size=5), np.random.default_rng(0))
    assert row.ok and row.samples == 20


@pytest.mark.parametrize("kwargs", [{"samples": 0}, {"max_size": 13}, {"max_size": 0}])
def test_options_validation(kwargs):
    with pytest.raises(ValueError):
        AppendixOptions(**kwargs)


@pytest.mark.slow
def test_full_default_suite():
    assert all(row.ok for row in run_appendix_suite(AppendixOptions()))
