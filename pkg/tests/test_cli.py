"""Tests for the command-line interface"""
import json

import numpy as np
import pytest

from src.core.signature import flatten_nonconstant, signature
from src.domain.exceptions import NumericalError
from src.domain.models import StreamBatch
from src.infrastructure.stream_files import FileStreamRepository
from src.presentation.cli import EXIT_GRADCHECK, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main


def write_csv(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_compute_prints_signature(tmp_path, capsys):
    """Test compute writes the signature JSON to stdout and to --output"""
    source = write_csv(tmp_path, "s.csv", "c1,c2\n0,0\n1,2\n")
    output = tmp_path / "sig.json"
    assert main(["compute", source, "--depth", "2", "--output", str(output)]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["flat"] == [1.0, 2.0, 0.5, 1.0, 1.0, 2.0]
    assert json.loads(output.read_text()) == payload


def test_bad_arguments_exit_with_usage_code():
    """Test argparse errors use exit status 1"""
    with pytest.raises(SystemExit) as error:
        main(["compute"])
    assert error.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as error:
        main(["generate", "levy"])
    assert error.value.code == EXIT_USAGE


def test_malformed_input_exits_with_usage_code(tmp_path, caplog):
    """Test a malformed stream file is reported with its line"""
    source = write_csv(tmp_path, "bad.csv", "c1,c2\n1,2\n3\n")
    assert main(["compute", source]) == EXIT_USAGE
    assert "line 3" in caplog.text


def test_numerical_failure_exit_code(tmp_path, mocker):
    """Test NumericalError maps to exit status 2"""
    use_case = mocker.Mock()
    use_case.execute.side_effect = NumericalError("non-finite values in stream")
    mocker.patch("src.presentation.cli.get_compute_signature_use_case", return_value=use_case)
    assert main(["compute", write_csv(tmp_path, "s.csv", "1\n2\n")]) == EXIT_NUMERICAL


def test_gradcheck_failure_exit_code(mocker, caplog):
    """Test a failing gradient suite maps to exit status 3"""
    use_case = mocker.Mock()
    use_case.execute.return_value = {"passed": False, "max_error": 0.3, "checks": []}
    mocker.patch("src.presentation.cli.get_gradcheck_use_case", return_value=use_case)
    assert main(["gradcheck", "--no-models"]) == EXIT_GRADCHECK
    use_case.execute.assert_called_once_with(seed=0, models=False, tolerance=1e-5)
    assert "refusing to continue" in caplog.text


def test_invert_two_point_stream(tmp_path, capsys):
    """Test a two-point stream is recovered exactly"""
    source = write_csv(tmp_path, "two.csv", "c1,c2\n1,1\n2,3\n")
    output = str(tmp_path / "recovered.csv")
    assert main(["invert", "--input", source, "--depth", "4", "--output", output]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["converged"] is True
    assert payload["iterations_used"] == 0
    recovered = FileStreamRepository().read_stream(output)
    np.testing.assert_allclose(recovered.points, [[1.0, 1.0], [2.0, 3.0]])


def test_invert_below_tolerance_exit_code(tmp_path, capsys):
    """Test an inversion that stops short of --tol exits with status 2"""
    source = write_csv(tmp_path, "walk.csv", "1,0\n2,1\n0,3\n1,1\n2,2\n")
    report = tmp_path / "report.json"
    code = main(["invert", "--input", source, "--depth", "3", "--max-iter", "3", "--tol", "1e-30",
                 "--output", str(tmp_path / "out.csv"), "--report", str(report)])
    assert code == EXIT_NUMERICAL
    payload = json.loads(report.read_text())
    assert payload["converged"] is False
    assert payload["final_loss"] == payload["loss_trace"][-1]


def test_generate_is_reproducible(tmp_path):
    """Test equal seeds write byte-identical files"""
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for output in (first, second):
        assert main(["generate", "ou", "--n", "4", "--len", "10", "--seed", "7", "--output", str(output)]) == EXIT_OK
    assert first.read_text() == second.read_text()
    assert len(first.read_text().splitlines()) == 4


def test_mmd_of_file_with_itself(tmp_path, capsys, rng):
    """Test a batch against itself gives statistic 0 and p = 1"""
    path = str(tmp_path / "batch.jsonl")
    FileStreamRepository().write_batch(path, StreamBatch(points=rng.normal(size=(5, 8, 1)).cumsum(axis=1)))
    assert main(["mmd", path, path, "--depth", "3", "--permutations", "100"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["statistic"] == pytest.approx(0.0, abs=1e-12)
    assert payload["p_value"] == 1.0


def test_missing_file_exits_with_usage_code(tmp_path):
    """Test an unreadable input file"""
    assert main(["mmd", str(tmp_path / "none.jsonl"), str(tmp_path / "none.jsonl")]) == EXIT_USAGE


def test_compute_batch_file(tmp_path, capsys, rng):
    """Test a JSON-lines input yields one signature per stream in file order"""
    path = str(tmp_path / "batch.jsonl")
    batch = StreamBatch(points=rng.normal(size=(3, 5, 2)))
    FileStreamRepository().write_batch(path, batch)
    assert main(["compute", path, "--depth", "2"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["count"] == 3
    for stream, sig in zip(batch, payload["signatures"]):
        assert sig["flat"] == pytest.approx(flatten_nonconstant(signature(stream, 2)).tolist(), abs=1e-14)


def test_mixed_first_row_is_not_a_header(tmp_path, caplog):
    """Test a first row mixing numbers and text is rejected at line 1"""
    source = write_csv(tmp_path, "bad.csv", "1,abc\n2,3\n4,5\n")
    assert main(["compute", source]) == EXIT_USAGE
    assert "line 1" in caplog.text


def test_hurst_dataset_defaults_to_300_points(tmp_path, capsys):
    """Test generate hurst-dataset samples 300 points per path unless --len is given"""
    output = tmp_path / "h.jsonl"
    assert main(["generate", "hurst-dataset", "--train-size", "2", "--test-size", "1", "--output",
                 str(output)]) == EXIT_OK
    train = FileStreamRepository().read_batch(str(tmp_path / "h.train.jsonl"))
    assert train.points.shape == (2, 300, 1)
