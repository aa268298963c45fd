# tests/test_artifacts.py

import json

import numpy as np
import pytest

from artifacts.base import FieldHeader
from artifacts.binary_writer import BinaryFieldWriter
from artifacts.csv_writer import CsvFieldWriter
from artifacts.factory import WriterFactory
from artifacts.reports import read_field, read_fields, write_report, write_table


def headers(count, shape=(8, 16)):
    return [FieldHeader(component=j, shape=shape, periods=(1.0, 2.0), lam=12.5, config_hash="abc")
            for j in range(count)]


@pytest.mark.parametrize("writer", [CsvFieldWriter(), BinaryFieldWriter()])
def test_fields_reload_bit_exact(writer, tmp_path, rng):
    fields = rng.normal(size=(3, 8, 16)) * 1e3
    result = writer.write_all(tmp_path, fields, headers(3))
    assert result.success
    values, header = writer.read(writer.path_for(tmp_path, 1))
    assert np.array_equal(values, fields[1])
    assert header == headers(3)[1]
    stacked, loaded = read_fields(tmp_path)
    assert np.array_equal(stacked, fields)
    assert [h.component for h in loaded] == [0, 1, 2]


def test_csv_header_line(tmp_path):
    writer = CsvFieldWriter()
    writer.write(tmp_path, np.zeros((8, 16)), headers(1)[0])
    first = (tmp_path / "v_0.csv").read_text().splitlines()[0]
    assert first.startswith("# ")
    assert json.loads(first[2:])["periods"] == [1.0, 2.0]


def test_read_rejects_shape_mismatch(tmp_path):
    writer = CsvFieldWriter()
    writer.write(tmp_path, np.zeros((8, 16)), headers(1, shape=(8, 8))[0])
    with pytest.raises(ValueError):
        read_field(tmp_path / "v_0.csv")


def test_read_fields_requires_contiguous_components(tmp_path):
    writer = BinaryFieldWriter()
    writer.write(tmp_path, np.zeros((8, 16)), headers(2)[1])
    with pytest.raises(ValueError):
        read_fields(tmp_path)
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(FileNotFoundError):
        read_fields(empty)


def test_writer_factory():
    assert WriterFactory.list_writers() == ["csv", "binary"]
    assert isinstance(WriterFactory.create_writer("binary"), BinaryFieldWriter)
    assert isinstance(WriterFactory.for_path("fields/v_2.csv"), CsvFieldWriter)
    with pytest.raises(ValueError, match="Unknown field format"):
        WriterFactory.create_writer("hdf5")
    with pytest.raises(ValueError):
        WriterFactory.for_path("v_0.npy")


def test_reports(tmp_path):
    path = write_report(tmp_path / "nested" / "report.json",
                        {"array": np.arange(3), "value": np.float64(1.5), "flag": np.bool_(True)})
    assert json.loads(path.read_text()) == {"array": [0, 1, 2], "value": 1.5, "flag": True}
    table = write_table(tmp_path / "table.csv", [{"a": 1, "b": 2, "c": 3}, {"a": 4, "b": 5, "c": 6}], ["a", "b"])
    assert table.read_text().splitlines() == ["a,b", "1,2", "4,5"]
