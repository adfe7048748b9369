"""Tests for stream files, parameter files and report storage"""
import json

import numpy as np
import pytest

from src.core.streamnet import build_model, preset
from src.domain.exceptions import StreamFormatError
from src.domain.models import ExperimentReport, Stream, StreamBatch
from src.infrastructure.param_store import BinaryParameterRepository
from src.infrastructure.report_store import JsonReportRepository
from src.infrastructure.stream_files import FileStreamRepository


@pytest.fixture
def repository():
    return FileStreamRepository()


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_csv_with_time_column(tmp_path, repository):
    """Test a `t` header marks the first column as the time grid"""
    path = write(tmp_path, "timed.csv", "t,c1,c2\n0.0,1,2\n0.5,3,4\n1.0,5,6\n")
    stream = repository.read_stream(path)
    assert stream.points.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
    assert stream.times.tolist() == [0.0, 0.5, 1.0]


def test_csv_without_header(tmp_path, repository):
    """Test a headerless file is all channels"""
    stream = repository.read_stream(write(tmp_path, "plain.csv", "1,2\n3,4\n"))
    assert stream.points.tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert stream.times is None


def test_csv_header_with_other_names(tmp_path, repository):
    """Test any all-text first row is read as a header"""
    stream = repository.read_stream(write(tmp_path, "named.csv", "x,y\n1,2\n3,4\n"))
    assert stream.points.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_csv_round_trip_is_exact(tmp_path, repository, rng):
    """Test written values read back bit for bit"""
    stream = Stream(points=rng.normal(size=(7, 3)), times=np.linspace(0.0, 1.0, 7) ** 2)
    path = str(tmp_path / "nested" / "stream.csv")
    repository.write_stream(path, stream)
    restored = repository.read_stream(path)
    np.testing.assert_array_equal(restored.points, stream.points)
    np.testing.assert_array_equal(restored.times, stream.times)


@pytest.mark.parametrize(
    "text,line",
    [
        ("c1,c2\n1,2\n3\n", 3),
        ("c1\n1\nabc\n", 3),
        ("t,c1\n0,1\n0.5,2\n0.5,3\n", 4),
        ("1\nnan\n", 2),
        ("1,abc\n2,3\n4,5\n", 1),
        ("c1,c2\n1,2\n3,x\n", 3),
        ("", 1),
    ],
)
def test_malformed_csv_names_line(tmp_path, repository, text, line):
    """Test each malformed file raises StreamFormatError pointing at the bad line"""
    path = write(tmp_path, "bad.csv", text)
    with pytest.raises(StreamFormatError) as error:
        repository.read_stream(path)
    assert error.value.line == line
    assert f"line {line}" in str(error.value)


def test_batch_round_trip(tmp_path, repository, rng):
    """Test JSON-lines batches with and without times"""
    batch = StreamBatch(points=rng.normal(size=(3, 5, 2)), times=np.linspace(0.0, 1.0, 5))
    path = str(tmp_path / "batch.jsonl")
    repository.write_batch(path, batch)
    restored = repository.read_batch(path)
    np.testing.assert_array_equal(restored.points, batch.points)
    np.testing.assert_array_equal(restored.times, batch.times)
    first = json.loads((tmp_path / "batch.jsonl").read_text().splitlines()[0])
    assert list(first) == ["t", "x"]

    untimed = StreamBatch(points=rng.normal(size=(2, 4, 1)))
    repository.write_batch(path, untimed)
    assert repository.read_batch(path).times is None


def test_malformed_batch_names_line(tmp_path, repository):
    """Test invalid records and ragged batches"""
    bad_json = write(tmp_path, "bad.jsonl", '{"x": [[1.0], [2.0]]}\n{"x": "oops"}\n')
    with pytest.raises(StreamFormatError) as error:
        repository.read_batch(bad_json)
    assert error.value.line == 2
    ragged = write(tmp_path, "ragged.jsonl", '{"x": [[1.0], [2.0]]}\n{"x": [[1.0], [2.0], [3.0]]}\n')
    with pytest.raises(StreamFormatError):
        repository.read_batch(ragged)
    with pytest.raises(StreamFormatError):
        repository.read_batch(write(tmp_path, "empty.jsonl", "\n"))


def test_parameter_round_trip(tmp_path):
    """Test the binary vector and sidecar layout survive a round trip"""
    model = build_model(preset("deep-sig"), 2, input_length=10)
    params = model.init_params(seed=4)
    repository = BinaryParameterRepository()
    repository.save(str(tmp_path / "model"), params.values, params.segments)
    assert (tmp_path / "model.bin").stat().st_size == 8 * params.size
    sidecar = json.loads((tmp_path / "model.json").read_text())
    assert sidecar["total"] == params.size
    assert sidecar["segments"][0] == {"name": "block0.map.0.weight", "offset": 0, "shape": [6, 3]}
    values, segments = repository.load(str(tmp_path / "model.bin"))
    np.testing.assert_array_equal(values, params.values)
    assert segments == params.segments


def test_parameter_size_mismatch(tmp_path):
    """Test a truncated binary file is rejected"""
    repository = BinaryParameterRepository()
    repository.save(str(tmp_path / "p"), np.arange(4.0), {"w": (0, (4,))})
    np.arange(3.0).astype("<f8").tofile(tmp_path / "p.bin")
    with pytest.raises(ValueError):
        repository.load(str(tmp_path / "p"))


def test_report_round_trip(tmp_path):
    """Test reports and plain JSON documents are persisted"""
    repository = JsonReportRepository()
    report = ExperimentReport(experiment="demo", config={"a": 1}, seed=3, loss_trace={"run0": [1.0, 0.5]},
                              metrics={"final": 0.5}, version="0.1.0")
    path = str(tmp_path / "out" / "report.json")
    repository.save_report(path, report)
    assert repository.load_report(path) == report
    repository.save_json(str(tmp_path / "doc.json"), {"k": [1, 2]})
    assert repository.load_json(str(tmp_path / "doc.json")) == {"k": [1, 2]}
