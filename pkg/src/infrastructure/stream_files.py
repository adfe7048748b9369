"""CSV and JSON-lines stream files"""
import csv
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, ValidationError

from src.domain.exceptions import ShapeError, StreamFormatError
from src.domain.models import Stream, StreamBatch
from src.domain.repositories import StreamRepository

logger = logging.getLogger(__name__)


class StreamRecord(BaseModel):
    """One line of a JSON-lines batch file"""
    x: list[list[float]]
    t: Optional[list[float]] = None


def _format(value: float) -> str:
    return repr(float(value))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _is_header(row: list[str]) -> bool:
    """A header row holds column names only; a row mixing numbers and text is bad data"""
    return not any(_is_number(cell) for cell in row)


class FileStreamRepository(StreamRepository):
    """Reads and writes streams on the local filesystem

    Single streams are CSV with header `t,c1,...,cd` (the `t` column is optional);
    batches are JSON-lines with one `{"t": [...], "x": [[...], ...]}` object per stream.
    """

    def read_stream(self, path: str) -> Stream:
        """
        Parse a CSV stream file

        Args:
            path: CSV file to read

        Returns:
            The stream, with times when the file has a `t` column

        Raises:
            StreamFormatError: naming the offending line
        """
        with open(path, newline="") as handle:
            rows = [(number, row) for number, row in enumerate(csv.reader(handle), start=1) if row]
        if not rows:
            raise StreamFormatError(path, 1, "file is empty")

        has_time = False
        width = len(rows[0][1])
        if _is_header(rows[0][1]):
            header = [cell.strip().lower() for cell in rows[0][1]]
            has_time = header[0] == "t"
            rows = rows[1:]
        if not rows:
            raise StreamFormatError(path, 2, "no data rows after the header")

        values = []
        for number, row in rows:
            if len(row) != width:
                raise StreamFormatError(path, number, f"expected {width} columns, found {len(row)}")
            try:
                values.append([float(cell) for cell in row])
            except ValueError:
                raise StreamFormatError(path, number, f"non-numeric value in row {row}")
            if not all(np.isfinite(values[-1])):
                raise StreamFormatError(path, number, "non-finite value")

        data = np.array(values)
        if has_time:
            if data.shape[1] < 2:
                raise StreamFormatError(path, rows[0][0], "a time column needs at least one channel")
            times = data[:, 0]
            for i in range(1, len(times)):
                if times[i] <= times[i - 1]:
                    raise StreamFormatError(path, rows[i][0], "times must be strictly increasing")
            stream = Stream(points=data[:, 1:], times=times)
        else:
            stream = Stream(points=data)
        logger.debug(f"Read stream {path}: n={stream.length}, d={stream.channels}")
        return stream

    def write_stream(self, path: str, stream: Stream) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        header = [f"c{i + 1}" for i in range(stream.channels)]
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            if stream.times is not None:
                writer.writerow(["t", *header])
                for t, point in zip(stream.times, stream.points):
                    writer.writerow([_format(t), *map(_format, point)])
            else:
                writer.writerow(header)
                for point in stream.points:
                    writer.writerow(list(map(_format, point)))

    def read_batch(self, path: str) -> StreamBatch:
        streams = []
        with open(path) as handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = StreamRecord.model_validate_json(line)
                    streams.append(Stream(points=np.array(record.x, dtype=np.float64), times=record.t))
                except ValidationError as e:
                    raise StreamFormatError(path, number, f"invalid stream record: {e.errors()[0]['msg']}")
                except ValueError as e:
                    raise StreamFormatError(path, number, str(e))
        if not streams:
            raise StreamFormatError(path, 1, "file contains no streams")
        try:
            return StreamBatch.from_streams(streams)
        except ShapeError as e:
            raise StreamFormatError(path, len(streams), str(e))

    def write_batch(self, path: str, batch: StreamBatch) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as handle:
            for stream in batch:
                record = {"x": stream.points.tolist()}
                if stream.times is not None:
                    record = {"t": stream.times.tolist(), **record}
                handle.write(json.dumps(record) + "\n")
