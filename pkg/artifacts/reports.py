# artifacts/reports.py

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from artifacts.base import FieldHeader
from artifacts.factory import WriterFactory

logger = logging.getLogger("artifacts.reports")


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_report(path: Path, payload: dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=_jsonable))
    logger.info(f"Report written to {path}")
    return path


def write_table(path: Path, rows: Iterable[dict[str, Any]], columns: list[str] | None = None) -> Path:
    """CSV table from row dicts; columns default to the keys of the first row"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    columns = columns or (list(rows[0].keys()) if rows else [])
    with path.open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path


def read_field(path: Path) -> tuple[np.ndarray, FieldHeader]:
    """One field dump, csv or binary by suffix"""
    return WriterFactory.for_path(path).read(Path(path))


def read_fields(directory: Path) -> tuple[np.ndarray, list[FieldHeader]]:
    """Stack v_j dumps from a fields directory in component order"""
    directory = Path(directory)
    candidates = sorted(p for p in directory.iterdir()
                        if p.stem.startswith("v_") and p.suffix in (".csv", ".bin"))
    if not candidates:
        raise FileNotFoundError(f"No field files found in {directory}")
    loaded = [read_field(p) for p in candidates]
    loaded.sort(key=lambda item: item[1].component)
    headers = [header for _, header in loaded]
    if [h.component for h in headers] != list(range(len(headers))):
        raise ValueError(f"Field components in {directory} are not 0..{len(headers) - 1}")
    return np.stack([values for values, _ in loaded]), headers
