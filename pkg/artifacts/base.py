# artifacts/base.py

from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass
class FieldHeader:
    """Metadata stored next to every field dump"""
    component: int
    shape: tuple[int, int]
    periods: tuple[float, float]
    lam: float
    quantity: str = "v"
    config_hash: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["shape"] = list(self.shape)
        data["periods"] = list(self.periods)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FieldHeader":
        return cls(
            component=int(data["component"]),
            shape=tuple(int(x) for x in data["shape"]),
            periods=tuple(float(x) for x in data["periods"]),
            lam=float(data["lam"]),
            quantity=data.get("quantity", "v"),
            config_hash=data.get("config_hash", ""),
            extra=dict(data.get("extra", {})),
        )


@dataclass
class ArtifactResult:
    """Outcome of writing one artifact"""
    success: bool
    paths: list[Path] = field(default_factory=list)
    error_message: str | None = None


class BaseFieldWriter(ABC):
    """Abstract base class for grid field writers"""

    suffix = ""

    def __init__(self, name: str):
        self.name = name

    def path_for(self, directory: Path, component: int) -> Path:
        return Path(directory) / f"v_{component}{self.suffix}"

    @abstractmethod
    def write(self, directory: Path, values: np.ndarray, header: FieldHeader) -> ArtifactResult:
        """Write one component's grid values"""
        pass

    @abstractmethod
    def read(self, path: Path) -> tuple[np.ndarray, FieldHeader]:
        """Read back grid values and their header"""
        pass

    def write_all(self, directory: Path, fields: np.ndarray, headers: list[FieldHeader]) -> ArtifactResult:
        """Write one file per component"""
        Path(directory).mkdir(parents=True, exist_ok=True)
        paths: list[Path] = []
        for values, header in zip(fields, headers):
            result = self.write(directory, values, header)
            if not result.success:
                return result
            paths.extend(result.paths)
        return ArtifactResult(success=True, paths=paths)
