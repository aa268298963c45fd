# cli/commands.py

import argparse
import json
import logging
import time
from pathlib import Path
from typing import Callable, Dict

import numpy as np
from pydantic import ValidationError

import config
from artifacts.base import FieldHeader
from artifacts.factory import WriterFactory
from artifacts.reports import read_fields, write_report, write_table
from cli.schemas import RunConfig
from engine.diagnostics import flux_integrals
from engine.engine import SolveEngine
from engine.errors import AdmissibilityBreach, ConfigError, SolverError
from engine.report import CRITICAL, DEGENERATE, SolveReport

logger = logging.getLogger("cli.commands")


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Parse a JSON run configuration; command-line overrides win over file values"""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"Configuration {path} must be a JSON object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if "lambda_multiple" in overrides:
        data.pop("lambda", None)
        data.pop("lambda_", None)
    data.update(overrides)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"Invalid configuration {path}: {exc}") from exc


def _header_payload(engine: SolveEngine) -> dict:
    run = engine.run
    return {
        "config": run.model_dump(mode="json", by_alias=True),
        "config_hash": run.config_hash(),
        "lambda": engine.lam,
        "lambda0": engine.cartan.lambda0,
        "b": engine.cartan.b.tolist(),
    }


def _write_fields(engine: SolveEngine, report: SolveReport, directory: Path) -> list[Path]:
    writer = WriterFactory.create_writer(engine.run.field_format)
    headers = [
        FieldHeader(component=j, shape=engine.grid.shape, periods=engine.grid.periods, lam=engine.lam,
                    config_hash=engine.run.config_hash(),
                    extra={"resolution": list(engine.grid.shape), "energy": report.energy.total})
        for j in range(engine.run.N)
    ]
    result = writer.write_all(directory, report.state.v, headers)
    if not result.success:
        raise OSError(f"Writing fields to {directory} failed: {result.error_message}")
    return result.paths


def cmd_solve_min(run: RunConfig, out: Path) -> int:
    """Local minimum: report.json, fields/ and convergence.csv"""
    engine = SolveEngine(run)
    report = engine.solve_minimum()
    out = Path(out)
    _write_fields(engine, report, out / "fields")
    write_table(out / "convergence.csv", report.trace,
                ["iteration", "energy", "gradient_norm", "step", "backtracks"])
    write_report(out / "report.json", {**_header_payload(engine), "minimum": report.to_dict()})
    if not report.is_critical:
        logger.warning(f"Minimization ended on a state labeled '{report.label}'")
        return config.EXIT_CHECK_FAILED
    return config.EXIT_OK


def cmd_solve_mp(run: RunConfig, out: Path, minimum_dir: Path | None = None) -> int:
    """Second solution: report.json, fields/, convergence.csv and path_profile.csv"""
    engine = SolveEngine(run)
    minimizer = None
    if minimum_dir is not None:
        v, _ = read_fields(Path(minimum_dir) / "fields")
        minimizer = engine.state_from_v(v)
        logger.info(f"Loaded minimizer from {minimum_dir}")
    minimum_report, result = engine.solve_mountain_pass(minimizer)
    if minimum_report is None:
        minimum_report = engine.verify(minimizer.v)
    report = result.report

    shared = float(np.max(np.abs(flux_integrals(report.state, engine.lam, engine.cartan)
                                 - flux_integrals(minimum_report.state, engine.lam, engine.cartan))))
    out = Path(out)
    _write_fields(engine, report, out / "fields")
    write_table(out / "convergence.csv", report.trace,
                ["sweep", "level", "climbing_index", "gradient_norm", "step"])
    write_table(out / "path_profile.csv", result.profile, ["sweep", "node", "energy"])
    write_report(out / "report.json", {
        **_header_payload(engine),
        "minimum": minimum_report.to_dict(),
        "mountain_pass": report.to_dict(),
        "level": result.level,
        "level_above_minimum": result.level - minimum_report.energy.total,
        "xi0": result.xi0,
        "degenerate": result.degenerate,
        "flux_difference": shared,
    })
    if report.label == DEGENERATE:
        logger.warning("Mountain pass stagnated at the minimum level: degenerate-minimizer alternative")
        return config.EXIT_OK
    return config.EXIT_OK if report.label == CRITICAL else config.EXIT_CHECK_FAILED


def cmd_appendix_check(run: RunConfig, out: Path) -> int:
    """Property table for the tri-diagonal determinant calculus"""
    engine = SolveEngine(run)
    started = time.perf_counter()
    rows = engine.appendix_check()
    table = [{
        "check": row.name, "samples": row.samples, "passed": row.passed, "failed": row.failed,
        "hypothesis_false": row.hypothesis_false, "max_error": row.max_error, "status": "pass" if row.ok else "FAIL",
        "notes": "; ".join(row.notes),
    } for row in rows]
    write_table(Path(out) / "appendix_check.csv", table)
    logger.info(f"Appendix check finished in {time.perf_counter() - started:.1f}s")
    for row in table:
        print(f"{row['check']:<28} {row['status']:<5} passed={row['passed']:<6} failed={row['failed']:<4} "
              f"hypothesis_false={row['hypothesis_false']:<6} max_error={row['max_error']:.3e}")
    return config.EXIT_OK if all(row.ok for row in rows) else config.EXIT_CHECK_FAILED


def cmd_constraint_sweep(run: RunConfig, out: Path) -> int:
    """Every sign pattern on random admissible samples"""
    if run.N > config.SWEEP_MAX_RANK:
        raise ConfigError(f"Full sign sweep limited to N <= {config.SWEEP_MAX_RANK}, got {run.N}")
    engine = SolveEngine(run)
    rows = engine.constraint_sweep()
    write_table(Path(out) / "constraint_sweep.csv", rows)
    failures = [row for row in rows
                if row["jacobian_det"] <= 0 or not row["unique"] or not row["root_ordering"]
                or (row["pattern"] == "1" * run.N and not row["matches_c_plus"])]
    for row in failures:
        logger.error(f"Sweep failure: sample {row['sample']}, pattern {row['pattern']}, "
                     f"det={row['jacobian_det']:.6g}, spread={row['uniqueness_spread']:.3e}")
    return config.EXIT_OK if not failures else config.EXIT_CHECK_FAILED


def cmd_verify(run: RunConfig, out: Path, fields_dir: Path) -> int:
    """Re-check stored fields against the strong form and the flux identities"""
    engine = SolveEngine(run)
    v, headers = read_fields(fields_dir)
    stale = {h.config_hash for h in headers} - {"", run.config_hash()}
    if stale:
        logger.warning(f"Fields in {fields_dir} were written under a different configuration hash")
    report = engine.verify(v)
    write_report(Path(out) / "report.json", {**_header_payload(engine), "verify": report.to_dict()})
    return config.EXIT_OK if report.is_critical else config.EXIT_CHECK_FAILED


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "solve-min": lambda run, args: cmd_solve_min(run, args.out),
    "solve-mp": lambda run, args: cmd_solve_mp(run, args.out, args.minimum),
    "appendix-check": lambda run, args: cmd_appendix_check(run, args.out),
    "constraint-sweep": lambda run, args: cmd_constraint_sweep(run, args.out),
    "verify": lambda run, args: cmd_verify(run, args.out, args.fields_dir),
}


def execute(args: argparse.Namespace) -> int:
    """Load the configuration, run one command and map failures to exit codes"""
    try:
        run = load_config(args.config, {
            "lambda_multiple": args.lambda_multiple,
            "resolution": args.resolution,
            "seed": args.seed,
            "field_format": args.fields,
        })
        return COMMANDS[args.command](run, args)
    except ConfigError as exc:
        logger.error(f"Configuration error: {exc}")
        return config.EXIT_CONFIG_ERROR
    except AdmissibilityBreach as exc:
        logger.error(f"Admissibility breach: {exc}")
        return config.EXIT_ADMISSIBILITY
    except SolverError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return config.EXIT_SOLVER_ERROR
    except ValueError as exc:
        logger.error(f"Invalid input: {exc}")
        return config.EXIT_CONFIG_ERROR
    except OSError as exc:
        logger.error(f"I/O error: {exc}")
        return config.EXIT_CONFIG_ERROR
