"""Tests for domain models"""
import numpy as np
import pytest

from src.domain.exceptions import GradientCheckError, ShapeError, StreamFormatError
from src.domain.models import (
    ExperimentReport,
    InversionResult,
    ProcessSpec,
    Stream,
    StreamBatch,
    TruncatedTensor,
)


def test_truncated_tensor_creation():
    """Test creating a valid TruncatedTensor"""
    tensor = TruncatedTensor(channels=2, depth=2, levels=([1.0], [1.0, 2.0], [0.5, 1.0, 1.0, 2.0]))

    assert tensor.size == 7
    assert tensor.level(2).shape == (2, 2)
    assert tensor.level(2)[0, 1] == 1.0
    assert tensor.to_flat() == [1.0, 1.0, 2.0, 0.5, 1.0, 1.0, 2.0]


def test_truncated_tensor_is_immutable():
    """Test levels are read-only copies of the input"""
    source = np.array([1.0, 2.0])
    tensor = TruncatedTensor(channels=2, depth=1, levels=([1.0], source))
    source[0] = 9.0

    assert tensor.levels[1][0] == 1.0
    with pytest.raises(ValueError):
        tensor.levels[1][0] = 3.0


def test_truncated_tensor_validation():
    """Test that TruncatedTensor validates its level sizes"""
    with pytest.raises(ShapeError):
        TruncatedTensor(channels=2, depth=1, levels=([1.0], [1.0, 2.0, 3.0]))

    with pytest.raises(ShapeError):
        TruncatedTensor(channels=2, depth=2, levels=([1.0], [1.0, 2.0]))

    with pytest.raises(ValueError):
        TruncatedTensor(channels=0, depth=0, levels=([1.0],))


def test_truncated_tensor_from_flat():
    """Test rebuilding a tensor from its flat layout"""
    tensor = TruncatedTensor.from_flat([1.0, 2.0, 4.0], channels=1, depth=2)

    assert tensor.levels[2].tolist() == [4.0]
    with pytest.raises(ShapeError):
        TruncatedTensor.from_flat([1.0, 2.0], channels=1, depth=2)


def test_stream_creation():
    """Test creating a Stream"""
    stream = Stream(points=[[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]], times=[0.0, 0.5, 1.0])

    assert stream.length == 3
    assert stream.channels == 2
    assert stream.times.tolist() == [0.0, 0.5, 1.0]


def test_stream_promotes_one_dimensional_points():
    """Test a flat sequence is a single-channel stream"""
    stream = Stream(points=[1.0, 2.0, 3.0])

    assert stream.points.shape == (3, 1)
    assert stream.times is None


def test_stream_validation():
    """Test that Stream validates shape and times"""
    with pytest.raises(ShapeError):
        Stream(points=np.zeros((2, 2, 2)))

    with pytest.raises(ShapeError):
        Stream(points=np.zeros((3, 1)), times=[0.0, 1.0])

    with pytest.raises(ValueError):
        Stream(points=np.zeros((3, 1)), times=[0.0, 1.0, 1.0])


def test_stream_batch_from_streams():
    """Test stacking streams into a batch and indexing back"""
    streams = [Stream(points=[[float(i)], [float(i + 1)]], times=[0.0, 1.0]) for i in range(3)]
    batch = StreamBatch.from_streams(streams)

    assert len(batch) == 3
    assert (batch.length, batch.channels) == (2, 1)
    assert batch[2].points.tolist() == [[2.0], [3.0]]
    assert [stream.points[0, 0] for stream in batch] == [0.0, 1.0, 2.0]


def test_stream_batch_validation():
    """Test that StreamBatch rejects ragged or mixed batches"""
    with pytest.raises(ShapeError):
        StreamBatch.from_streams([Stream(points=[1.0, 2.0]), Stream(points=[1.0, 2.0, 3.0])])

    with pytest.raises(ShapeError):
        StreamBatch.from_streams([Stream(points=[1.0, 2.0], times=[0.0, 1.0]), Stream(points=[1.0, 2.0])])

    with pytest.raises(ShapeError):
        StreamBatch.from_streams([])

    with pytest.raises(ShapeError):
        StreamBatch(points=np.zeros((3, 2)))


def test_stream_batch_broadcasts_shared_times():
    """Test one time grid is shared by every stream"""
    batch = StreamBatch(points=np.zeros((2, 3, 1)), times=[0.0, 0.5, 1.0])

    assert batch.times.shape == (2, 3)
    assert batch[1].times.tolist() == [0.0, 0.5, 1.0]


def test_inversion_result_validation():
    """Test that InversionResult keeps its final loss consistent with the trace"""
    stream = Stream(points=[[0.0], [1.0]])
    result = InversionResult(recovered=stream, loss_trace=[1.0, 0.1], final_loss=0.1, iterations_used=2)

    assert result.increment_rmse is None
    with pytest.raises(ValueError):
        InversionResult(recovered=stream, loss_trace=[1.0, 0.1], final_loss=0.5, iterations_used=2)

    with pytest.raises(ValueError):
        InversionResult(recovered=stream, loss_trace=[], final_loss=0.0, iterations_used=0)


def test_process_spec_defaults_and_validation():
    """Test ProcessSpec defaults and parameter ranges"""
    spec = ProcessSpec()

    assert (spec.kind, spec.length, spec.theta, spec.sigma) == ("brownian", 100, 8.0, 1.0)
    with pytest.raises(ValueError):
        ProcessSpec(kind="levy")

    with pytest.raises(ValueError):
        ProcessSpec(kind="fbm", hurst=1.0)

    with pytest.raises(ValueError):
        ProcessSpec(length=1)


def test_experiment_report_rejects_nan():
    """Test that ExperimentReport refuses NaN in a loss trace"""
    report = ExperimentReport(experiment="demo", config={}, seed=0, loss_trace={"mse": [0.5, 0.25]}, version="0.1.0")

    assert report.metrics == {}
    with pytest.raises(ValueError):
        ExperimentReport(experiment="demo", config={}, seed=0, loss_trace={"mse": [float("nan")]}, version="0.1.0")


def test_exception_messages():
    """Test errors carry their location in the message"""
    assert str(ShapeError("bad channels", block_index=1)).startswith("block 1: ")
    assert ShapeError("bad").block_index is None
    assert str(StreamFormatError("a.csv", 4, "not a number")) == "a.csv: line 4: not a number"
    assert GradientCheckError("suite failed", 0.5).max_error == 0.5
