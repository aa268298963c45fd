# artifacts/csv_writer.py

import json
import logging
from pathlib import Path

import numpy as np

from artifacts.base import ArtifactResult, BaseFieldWriter, FieldHeader

logger = logging.getLogger("artifacts.csv_writer")


class CsvFieldWriter(BaseFieldWriter):
    """
    Plain-text dump: a '# {json header}' line, then one grid row per line.
    Values keep 17 significant digits so a reload is bit-exact.
    """

    suffix = ".csv"

    def __init__(self):
        super().__init__("csv")

    def write(self, directory: Path, values: np.ndarray, header: FieldHeader) -> ArtifactResult:
        path = self.path_for(directory, header.component)
        try:
            np.savetxt(path, np.asarray(values, dtype=float), fmt="%.17g", delimiter=",",
                       header=json.dumps(header.to_dict(), sort_keys=True), comments="# ")
        except OSError as exc:
            logger.error(f"Failed to write {path}: {exc}")
            return ArtifactResult(success=False, error_message=str(exc))
        logger.debug(f"Wrote field component {header.component} to {path}")
        return ArtifactResult(success=True, paths=[path])

    def read(self, path: Path) -> tuple[np.ndarray, FieldHeader]:
        path = Path(path)
        with path.open() as handle:
            first = handle.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path} has no field header")
        header = FieldHeader.from_dict(json.loads(first[2:]))
        values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if values.shape != header.shape:
            raise ValueError(f"{path}: expected shape {header.shape}, found {values.shape}")
        return values, header
