# artifacts/factory.py

import logging
from typing import Dict, Type

import config
from artifacts.base import BaseFieldWriter
from artifacts.binary_writer import BinaryFieldWriter
from artifacts.csv_writer import CsvFieldWriter

logger = logging.getLogger("artifacts.factory")


class WriterFactory:
    """Factory for creating and managing field writers"""

    _writers: Dict[str, Type[BaseFieldWriter]] = {
        "csv": CsvFieldWriter,
        "binary": BinaryFieldWriter,
    }

    @classmethod
    def create_writer(cls, field_format: str | None = None) -> BaseFieldWriter:
        """Create a writer instance by format name"""
        field_format = field_format or config.DEFAULT_FIELD_FORMAT
        if field_format not in cls._writers:
            available = list(cls._writers.keys())
            raise ValueError(f"Unknown field format '{field_format}'. Available formats: {available}")
        logger.debug(f"Creating {field_format} field writer")
        return cls._writers[field_format]()

    @classmethod
    def register_writer(cls, name: str, writer_class: Type[BaseFieldWriter]) -> None:
        """Register a new writer class"""
        cls._writers[name] = writer_class
        logger.info(f"Registered writer: {name}")

    @classmethod
    def list_writers(cls) -> list[str]:
        """List all available writer names"""
        return list(cls._writers.keys())

    @classmethod
    def for_path(cls, path) -> BaseFieldWriter:
        """Writer whose suffix matches an existing file"""
        for writer_class in cls._writers.values():
            if str(path).endswith(writer_class.suffix):
                return writer_class()
        raise ValueError(f"No field writer handles '{path}'")
