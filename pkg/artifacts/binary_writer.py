# artifacts/binary_writer.py

import json
import logging
from pathlib import Path

import numpy as np

from artifacts.base import ArtifactResult, BaseFieldWriter, FieldHeader

logger = logging.getLogger("artifacts.binary_writer")


class BinaryFieldWriter(BaseFieldWriter):
    """Little-endian float64 row-major dump with a JSON sidecar"""

    suffix = ".bin"

    def __init__(self):
        super().__init__("binary")

    def write(self, directory: Path, values: np.ndarray, header: FieldHeader) -> ArtifactResult:
        path = self.path_for(directory, header.component)
        sidecar = path.with_suffix(".json")
        try:
            np.ascontiguousarray(values, dtype="<f8").tofile(path)
            sidecar.write_text(json.dumps(header.to_dict(), indent=2, sort_keys=True))
        except OSError as exc:
            logger.error(f"Failed to write {path}: {exc}")
            return ArtifactResult(success=False, error_message=str(exc))
        logger.debug(f"Wrote field component {header.component} to {path}")
        return ArtifactResult(success=True, paths=[path, sidecar])

    def read(self, path: Path) -> tuple[np.ndarray, FieldHeader]:
        path = Path(path)
        header = FieldHeader.from_dict(json.loads(path.with_suffix(".json").read_text()))
        values = np.fromfile(path, dtype="<f8")
        if values.size != header.shape[0] * header.shape[1]:
            raise ValueError(f"{path}: expected {header.shape[0] * header.shape[1]} values, found {values.size}")
        return values.reshape(header.shape), header
