# tests/test_engine.py

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cli.schemas import RunConfig
from engine.engine import SolveEngine
from engine.errors import AdmissibilityBreach

ROOT = Path(__file__).resolve().parents[1]

BASE = {
    "N": 3,
    "lambda_multiple": 20.0,
    "resolution": 32,
    "vortices": [[{"point": [0.3, 0.4], "multiplicity": 1}], [], []],
}


@pytest.mark.parametrize("module", ["engine.verify", "engine.report", "engine.solvers", "engine.engine",
                                    "cli.commands", "main"])
def test_module_imports_in_fresh_interpreter(module):
    result = subprocess.run([sys.executable, "-c", f"import {module}"], cwd=ROOT,
                            capture_output=True, text=True)
    assert result.returncode == 0, result.stderr


def test_admissible_sample_shrinks_into_margin():
    engine = SolveEngine(RunConfig.model_validate(BASE))
    w, ctx = engine.admissible_sample(np.random.default_rng(7), 0.5, 2)
    assert np.max(np.abs(w)) > 0
    np.testing.assert_allclose(np.mean(w, axis=(-2, -1)), 0.0, atol=1e-12)
    assert ctx.N == 3


def test_admissible_sample_fallback_warns(caplog):
    engine = SolveEngine(RunConfig.model_validate(BASE))
    with caplog.at_level("WARNING", logger="engine.engine"):
        w, _ = engine.admissible_sample(np.random.default_rng(7), 0.5, 2, max_halvings=0)
    assert not np.any(w)
    assert "using w = 0" in caplog.text


def test_admissible_sample_below_threshold_raises():
    engine = SolveEngine(RunConfig.model_validate({**BASE, "lambda_multiple": 0.5}))
    with pytest.raises(AdmissibilityBreach) as info:
        engine.admissible_sample(np.random.default_rng(7), 0.5, 2, max_halvings=3)
    assert info.value.component == 0
